//! End-to-end pipeline checks: batch reproducibility from the manifest,
//! dump formats, and the CLI surface.

use std::path::Path;
use std::process::Command;

use indoor_epi::analysis::SampleTable;
use indoor_epi::config::ExperimentConfig;
use indoor_epi::exposure::{PlaneTable, PLANE_TABLE};
use indoor_epi::runner::{
    emit_reports, run_batch, run_scenario_full, write_exposure_csv, write_trajectory_csv,
    write_voronoi_csv, RunManifest,
};
use indoor_epi::scenario::enumerate_runs;

fn tiny_config() -> ExperimentConfig {
    let mut config = ExperimentConfig::desk_default();
    config.poi_setups.truncate(2);
    config.n_stopping = vec![1];
    config.t_stopping_s = vec![30.0];
    config.replicates = 2;
    config.population.sim_total = Some(6);
    config.population.sim_infectors = Some(1);
    config.population.dwell_s = 90.0;
    config
}

#[test]
fn manifest_reproduces_the_batch() {
    let config = tiny_config();
    let dir = tempfile::tempdir().unwrap();
    let first_dir = dir.path().join("first");
    let report = run_batch(&config, &first_dir, 2, false).unwrap();
    emit_reports(&report, &config, &first_dir).unwrap();

    let manifest: RunManifest = serde_json::from_str(
        &std::fs::read_to_string(first_dir.join("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest.config_hash, config.hash());
    assert_eq!(manifest.runs, 4);

    let second_dir = dir.path().join("second");
    let second = run_batch(&manifest.config, &second_dir, 1, false).unwrap();
    assert_eq!(report.table, second.table, "manifest rerun must reproduce the table");

    // And the sample CSV round-trips losslessly enough to agree row-wise.
    let loaded = SampleTable::from_csv(&first_dir.join("samples.csv")).unwrap();
    assert_eq!(loaded.len(), report.table.len());
}

#[test]
fn dump_files_have_documented_shapes() {
    let config = tiny_config();
    let spec = &enumerate_runs(&config).unwrap()[0];
    let artifacts = run_scenario_full(spec, &config.engine).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let traj_path = dir.path().join("trajectories.csv");
    write_trajectory_csv(&artifacts, &traj_path).unwrap();
    let mut rdr = csv::Reader::from_path(&traj_path).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        &csv::StringRecord::from(vec!["step", "time_s", "agent_id", "role", "phase", "x_m", "y_m"])
    );
    let rows = rdr.records().count();
    let expected: usize = artifacts
        .outcome
        .trajectories
        .tracks
        .iter()
        .map(|t| t.positions.len())
        .sum();
    assert_eq!(rows, expected);

    let voronoi_path = dir.path().join("voronoi.csv");
    write_voronoi_csv(&artifacts, &spec.room, config.engine.voronoi_stride_s, &voronoi_path)
        .unwrap();
    let mut rdr = csv::Reader::from_path(&voronoi_path).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        &csv::StringRecord::from(vec!["time_s", "agent_id", "area_m2"])
    );

    let exposure_path = dir.path().join("exposures.csv");
    write_exposure_csv(&artifacts, &exposure_path).unwrap();
    let mut rdr = csv::Reader::from_path(&exposure_path).unwrap();
    assert_eq!(rdr.records().count(), config.population.sim_total.unwrap());
}

#[test]
fn shipped_plane_table_mirror_matches_embedded_constant() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cough_planes.csv");
    let mirror = PlaneTable::from_csv(&path).unwrap();
    assert_eq!(mirror.rows.len(), PLANE_TABLE.len());
    for (m, e) in mirror.rows.iter().zip(PLANE_TABLE.iter()) {
        assert_eq!(m, e, "CSV mirror row diverges from embedded table");
    }
}

#[test]
fn cli_run_and_analyze_smoke() {
    let dir = tempfile::tempdir().unwrap();

    let output = Command::new(env!("CARGO_BIN_EXE_indoor-epi"))
        .args([
            "run",
            "--n-pois",
            "4",
            "--spacing",
            "2.0",
            "--n-stopping",
            "1",
            "--t-stopping",
            "30",
            "--agents",
            "6",
            "--infectors",
            "1",
            "--dwell",
            "90",
            "--seed",
            "3",
            "--out",
            dir.path().to_str().unwrap(),
            "--dump-exposures",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let result: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(result["n_crowding"], 4);
    assert!(dir.path().join("exposures.csv").exists());

    let config_out = Command::new(env!("CARGO_BIN_EXE_indoor-epi"))
        .args(["config", "full_scale"])
        .output()
        .unwrap();
    assert!(config_out.status.success());
    let profile: serde_json::Value = serde_json::from_slice(&config_out.stdout).unwrap();
    assert_eq!(profile["epidemic"]["alpha_ug"], 7.0);
}

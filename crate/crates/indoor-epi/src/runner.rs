//! Orchestration: single runs, the checkpointed batch, and report files.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{SampleRow, SampleTable};
use crate::config::{EngineConfig, ExperimentConfig, GapLaw};
use crate::dynamics::{build_entry_schedule, Role, SimOutcome, World, WorldConfig};
use crate::error::{Error, Result};
use crate::exposure::{
    accumulate_exposure, average_exposure, count_high_risk, predict_new_cases, schedule_coughs,
    CoughEvent, ExposureLedger,
};
use crate::metrics::{compute_personal_spaces, scenario_space_indicator};
use crate::rng::{derive_labeled, rng_from};
use crate::analysis::stats::five_number_summary;
use crate::scenario::{enumerate_runs, ScenarioSpec};

/// Population sizing for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub sim_total: usize,
    pub sim_infectors: usize,
    pub dwell_s: f64,
    pub mean_entry_gap_s: f64,
    #[serde(default)]
    pub entry_gap_law: GapLaw,
    /// Real-world counts these were scaled from, when applicable.
    pub real_total: Option<u64>,
    pub real_infectors: Option<u64>,
}

/// Outputs of one scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario_id: usize,
    pub replicate: u32,
    pub seed: u64,
    pub n_crowding: usize,
    pub d_crowding: u8,
    pub n_stopping: u32,
    pub t_stopping_s: f64,
    pub t_total_stop_s: f64,
    pub sigma_spaces_m2: f64,
    pub c_risk: usize,
    pub c_new_sim: f64,
    pub c_new_scaled: f64,
    pub e_ave_ug: f64,
    pub runtime_s: f64,
}

impl ScenarioResult {
    pub fn sample_row(&self) -> SampleRow {
        SampleRow {
            n_crowding: self.n_crowding as f64,
            d_crowding: f64::from(self.d_crowding),
            n_stopping: f64::from(self.n_stopping),
            t_stopping: self.t_stopping_s,
            t_total_stop: self.t_total_stop_s,
            sigma_spaces: self.sigma_spaces_m2,
            c_new: self.c_new_scaled,
            e_ave: self.e_ave_ug,
        }
    }
}

/// Everything a single run produces, for dumps and diagnostics.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub result: ScenarioResult,
    pub outcome: SimOutcome,
    pub coughs: Vec<CoughEvent>,
    pub ledger: ExposureLedger,
}

/// Runs the full pipeline for one spec, keeping the raw simulation outputs.
pub fn run_scenario_full(spec: &ScenarioSpec, engine: &EngineConfig) -> Result<RunArtifacts> {
    let started = Instant::now();
    spec.validate()?;

    let mut entry_rng = rng_from(derive_labeled(spec.seed, "entry", &[]));
    let schedule = build_entry_schedule(&spec.population, &mut entry_rng)?;

    let world = World::new(
        WorldConfig {
            room: spec.room,
            pois: spec.layout.points.clone(),
            pattern: spec.pattern,
            dwell_s: spec.population.dwell_s,
            dt: engine.dt_s,
            target_clearance_m: engine.target_clearance_m,
        },
        &schedule,
        spec.seed,
    )?;
    let outcome = world.run_to_completion().map_err(|e| match e {
        Error::Integrity { agent, step, message } => Error::Integrity {
            agent,
            step,
            message: format!("scenario {} replicate {}: {message}", spec.scenario_id, spec.replicate),
        },
        other => other,
    })?;

    let mut coughs = Vec::new();
    for track in &outcome.trajectories.tracks {
        if track.role != Role::Infector {
            continue;
        }
        let mut cough_rng = rng_from(derive_labeled(spec.seed, "cough", &[track.id as u64]));
        coughs.extend(schedule_coughs(
            &track.positions,
            track.id,
            track.enter_step as f64 * engine.dt_s,
            engine.dt_s,
            &spec.epidemic,
            &mut cough_rng,
        ));
    }

    let ledger = accumulate_exposure(
        &outcome.trajectories,
        &coughs,
        &spec.epidemic,
        spec.population.dwell_s,
        engine.exposure_sample_stride,
    );
    let c_risk = count_high_risk(&ledger, spec.epidemic.alpha_ug);
    let (c_new_sim, c_new_scaled) =
        predict_new_cases(c_risk, spec.epidemic.beta, spec.epidemic.rho);
    let e_ave_ug = average_exposure(&ledger)?;
    let sigma_spaces_m2 = scenario_space_indicator(
        &outcome.trajectories,
        &spec.room,
        engine.voronoi_stride_s,
        engine.sigma_reduction,
    )?;

    let result = ScenarioResult {
        scenario_id: spec.scenario_id,
        replicate: spec.replicate,
        seed: spec.seed,
        n_crowding: spec.layout.n_crowding,
        d_crowding: spec.d_crowding,
        n_stopping: spec.pattern.n_stopping,
        t_stopping_s: spec.pattern.t_stopping_s,
        t_total_stop_s: spec.t_total_stop_s,
        sigma_spaces_m2,
        c_risk,
        c_new_sim,
        c_new_scaled,
        e_ave_ug,
        runtime_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunArtifacts {
        result,
        outcome,
        coughs,
        ledger,
    })
}

pub fn run_scenario(spec: &ScenarioSpec, engine: &EngineConfig) -> Result<ScenarioResult> {
    run_scenario_full(spec, engine).map(|artifacts| artifacts.result)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunFailure {
    pub scenario_id: usize,
    pub replicate: u32,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct BatchReport {
    pub results: Vec<ScenarioResult>,
    pub failures: Vec<RunFailure>,
    pub table: SampleTable,
    pub reused_checkpoints: usize,
}

fn checkpoint_path(dir: &Path, scenario_id: usize, replicate: u32) -> PathBuf {
    dir.join(format!("s{scenario_id:04}_r{replicate}.json"))
}

/// Runs every (scenario, replicate) job, checkpointing one file per
/// completed run so an interrupted batch resumes where it stopped. Failed
/// runs are recorded and the batch continues.
pub fn run_batch(
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
    resume: bool,
) -> Result<BatchReport> {
    let jobs = enumerate_runs(config)?;
    let checkpoints = out_dir.join("checkpoints");
    std::fs::create_dir_all(&checkpoints)?;

    let mut done: Vec<ScenarioResult> = Vec::new();
    let mut pending: Vec<&ScenarioSpec> = Vec::new();
    for job in &jobs {
        let path = checkpoint_path(&checkpoints, job.scenario_id, job.replicate);
        let mut reused = false;
        if resume && path.exists() {
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(result) = serde_json::from_str::<ScenarioResult>(&text) {
                    if result.seed == job.seed {
                        done.push(result);
                        reused = true;
                    }
                }
            }
        }
        if !reused {
            pending.push(job);
        }
    }
    let reused_checkpoints = done.len();

    let engine = config.engine.clone();
    let failures = Mutex::new(Vec::new());
    let completed = Mutex::new(done);

    let run_all = |pool_jobs: &[&ScenarioSpec]| {
        pool_jobs.par_iter().for_each(|spec| {
            match run_scenario(spec, &engine) {
                Ok(result) => {
                    let path = checkpoint_path(&checkpoints, spec.scenario_id, spec.replicate);
                    let tmp = path.with_extension("json.tmp");
                    let write = std::fs::write(&tmp, serde_json::to_string(&result).unwrap())
                        .and_then(|()| std::fs::rename(&tmp, &path));
                    if let Err(e) = write {
                        failures.lock().unwrap().push(RunFailure {
                            scenario_id: spec.scenario_id,
                            replicate: spec.replicate,
                            reason: format!("checkpoint write failed: {e}"),
                        });
                        return;
                    }
                    completed.lock().unwrap().push(result);
                }
                Err(e) => failures.lock().unwrap().push(RunFailure {
                    scenario_id: spec.scenario_id,
                    replicate: spec.replicate,
                    reason: e.to_string(),
                }),
            }
        });
    };

    if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| run_all(&pending));
    } else {
        run_all(&pending);
    }

    let mut results = completed.into_inner().unwrap();
    let mut failures = failures.into_inner().unwrap();
    results.sort_by_key(|r| (r.scenario_id, r.replicate));
    failures.sort_by_key(|f| (f.scenario_id, f.replicate));

    let table = SampleTable {
        rows: results.iter().map(ScenarioResult::sample_row).collect(),
    };
    Ok(BatchReport {
        results,
        failures,
        table,
        reused_checkpoints,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub base_seed: u64,
    pub crate_version: String,
    pub runs: usize,
    pub config: ExperimentConfig,
}

/// Writes the sample table, per-factor box-plot summaries, the full result
/// rows, and a manifest sufficient to reproduce the batch.
pub fn emit_reports(report: &BatchReport, config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    if report.table.is_empty() {
        return Err(Error::Table("refusing to report an empty table".into()));
    }
    emit_table_reports(&report.table, out_dir)?;

    let mut results = csv::Writer::from_path(out_dir.join("results.csv"))?;
    for row in &report.results {
        results.serialize(row)?;
    }
    results.flush()?;

    if !report.failures.is_empty() {
        let mut failures = csv::Writer::from_path(out_dir.join("failures.csv"))?;
        for f in &report.failures {
            failures.serialize(f)?;
        }
        failures.flush()?;
    }

    let manifest = RunManifest {
        config_hash: config.hash(),
        base_seed: config.base_seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        runs: report.results.len(),
        config: config.clone(),
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Sample CSV plus box-plot summaries, for tables loaded from disk.
pub fn emit_table_reports(table: &SampleTable, out_dir: &Path) -> Result<()> {
    if table.is_empty() {
        return Err(Error::Table("refusing to report an empty table".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    table.to_csv(&out_dir.join("samples.csv"))?;
    for outcome in ["c_new", "e_ave"] {
        write_boxplot_data(table, outcome, &out_dir.join(format!("boxplot_{outcome}.csv")))?;
    }
    Ok(())
}

/// Per-step trajectory dump: step, time_s, agent_id, role, phase, x_m, y_m.
pub fn write_trajectory_csv(artifacts: &RunArtifacts, path: &Path) -> Result<()> {
    let traj = &artifacts.outcome.trajectories;
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["step", "time_s", "agent_id", "role", "phase", "x_m", "y_m"])?;
    for (track, tags) in traj.tracks.iter().zip(&artifacts.outcome.phases.tags) {
        let role = match track.role {
            Role::Susceptible => "susceptible",
            Role::Infector => "infector",
        };
        for (k, (pos, tag)) in track.positions.iter().zip(tags).enumerate() {
            let step = track.enter_step + k as u64;
            wtr.write_record([
                step.to_string(),
                format!("{:.3}", step as f64 * traj.dt),
                track.id.to_string(),
                role.to_string(),
                tag.as_str().to_string(),
                format!("{:.6}", pos.x),
                format!("{:.6}", pos.y),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Per-tick Voronoi dump: time_s, agent_id, area_m2.
pub fn write_voronoi_csv(
    artifacts: &RunArtifacts,
    room: &crate::scenario::RoomSpec,
    stride_s: f64,
    path: &Path,
) -> Result<()> {
    let traj = &artifacts.outcome.trajectories;
    let stride_steps = (stride_s / traj.dt).round().max(1.0) as u64;
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["time_s", "agent_id", "area_m2"])?;
    let mut tick = 0;
    while tick <= traj.last_step() {
        let occupants = traj.occupants_at(tick);
        if !occupants.is_empty() {
            let sample = compute_personal_spaces(&occupants, room, tick as f64 * traj.dt)?;
            for (agent, area) in sample.areas {
                wtr.write_record([
                    format!("{:.3}", sample.time_s),
                    agent.to_string(),
                    format!("{area:.6}"),
                ])?;
            }
        }
        tick += stride_steps;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-agent exposure dump: agent_id, role, exposure_ug.
pub fn write_exposure_csv(artifacts: &RunArtifacts, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["agent_id", "role", "exposure_ug"])?;
    for track in &artifacts.outcome.trajectories.tracks {
        let role = match track.role {
            Role::Susceptible => "susceptible",
            Role::Infector => "infector",
        };
        let exposure = artifacts.ledger.exposure(track.id).unwrap_or(0.0);
        wtr.write_record([track.id.to_string(), role.to_string(), format!("{exposure:.9e}")])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoxplotRow<'a> {
    factor: &'a str,
    level: f64,
    count: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
    whisker_low: f64,
    whisker_high: f64,
    mean: f64,
}

fn write_boxplot_data(table: &SampleTable, outcome: &str, path: &Path) -> Result<()> {
    let outcome_values = table.column(outcome)?;
    let mut wtr = csv::Writer::from_path(path)?;
    for factor in ["n_crowding", "d_crowding", "n_stopping", "t_stopping"] {
        let factor_values = table.column(factor)?;
        let mut levels: Vec<f64> = factor_values.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        for level in levels {
            let group: Vec<f64> = factor_values
                .iter()
                .zip(&outcome_values)
                .filter(|(f, _)| **f == level)
                .map(|(_, o)| *o)
                .collect();
            let summary = five_number_summary(&group);
            wtr.serialize(BoxplotRow {
                factor,
                level,
                count: group.len(),
                min: summary.min,
                q1: summary.q1,
                median: summary.median,
                q3: summary.q3,
                max: summary.max,
                whisker_low: summary.whisker_low,
                whisker_high: summary.whisker_high,
                mean: group.iter().sum::<f64>() / group.len() as f64,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use indoor_epi::analysis::{
    analyze, AnalysisOptions, AnalysisReport, BootstrapReport, CausalReport, EffectKind,
    PathModel, SampleTable,
};
use indoor_epi::config::ExperimentConfig;
use indoor_epi::rng::derive_seed;
use indoor_epi::runner::{
    emit_reports, emit_table_reports, run_batch, run_scenario_full, write_exposure_csv,
    write_trajectory_csv, write_voronoi_csv, RunManifest,
};
use indoor_epi::scenario::{build_poi_grid, ScenarioSpec, StoppingPattern};

/// Indoor epidemic scenario simulator and analysis toolkit.
#[derive(Parser)]
#[command(name = "indoor-epi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single scenario and print its result.
    Run(RunArgs),
    /// Run every (scenario x replicate) job of an experiment config.
    Batch(BatchArgs),
    /// Fit path models and causal effects on a sample table.
    Analyze(AnalyzeArgs),
    /// Write box-plot summaries for an existing sample table.
    Report(ReportArgs),
    /// Print a built-in experiment profile as JSON.
    Config(ConfigArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config supplying room/population/epidemic defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of POIs (perfect square).
    #[arg(long, default_value_t = 4)]
    n_pois: usize,
    /// Nearest-neighbor POI spacing in meters.
    #[arg(long, default_value_t = 2.0)]
    spacing: f64,
    /// Crowding distribution label (0 centralized, 1 dispersed).
    #[arg(long, default_value_t = 0)]
    d_crowding: u8,
    /// Stops per agent.
    #[arg(long, default_value_t = 3)]
    n_stopping: u32,
    /// Duration of each stop, seconds.
    #[arg(long, default_value_t = 180.0)]
    t_stopping: f64,
    /// Agents in the room (overrides the config).
    #[arg(long)]
    agents: Option<usize>,
    /// Infectors among the agents (overrides the config).
    #[arg(long)]
    infectors: Option<usize>,
    /// Dwell time, seconds (overrides the config).
    #[arg(long)]
    dwell: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: $INDOOR_EPI_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-step trajectory CSV (large).
    #[arg(long)]
    dump_trajectories: bool,
    /// Write the per-tick Voronoi area CSV.
    #[arg(long)]
    dump_voronoi: bool,
    /// Write the per-agent exposure CSV.
    #[arg(long)]
    dump_exposures: bool,
}

#[derive(Args)]
struct BatchArgs {
    /// Experiment config (or a manifest.json from a previous batch).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $INDOOR_EPI_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Reuse checkpoints from an interrupted batch.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Sample table CSV.
    #[arg(long)]
    table: PathBuf,
    /// Optional path-model JSON; default runs both built-in models.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 95.0)]
    ci: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory (default: $INDOOR_EPI_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sample table CSV.
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Profile name: desk or full_scale.
    #[arg(default_value = "desk")]
    profile: String,
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("INDOOR_EPI_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    if let Ok(config) = ExperimentConfig::from_path(path) {
        return Ok(config);
    }
    // Accept a batch manifest as the config source for exact reruns.
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).context("not an experiment config or manifest")?;
    Ok(manifest.config)
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run_single(args),
        Command::Batch(args) => run_batch_cmd(args),
        Command::Analyze(args) => analyze_cmd(args),
        Command::Report(args) => report_cmd(args),
        Command::Config(args) => config_cmd(args),
    }
}

fn run_single(args: RunArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::desk_default(),
    };
    if let Some(agents) = args.agents {
        config.population.sim_total = Some(agents);
    }
    if let Some(infectors) = args.infectors {
        config.population.sim_infectors = Some(infectors);
    }
    if let Some(dwell) = args.dwell {
        config.population.dwell_s = dwell;
    }

    let room = config.room()?;
    let layout = build_poi_grid(args.n_pois, args.spacing, &room)?;
    let pattern = StoppingPattern::new(args.n_stopping, args.t_stopping)?;
    let spec = ScenarioSpec {
        scenario_id: 0,
        replicate: 0,
        room,
        layout,
        d_crowding: args.d_crowding,
        pattern,
        t_total_stop_s: pattern.total_stop_duration(),
        population: config.population.resolve(config.epidemic.rho)?,
        epidemic: config.epidemic.resolve()?,
        seed: derive_seed(args.seed, &[0, 0]),
    };

    let artifacts = run_scenario_full(&spec, &config.engine)?;
    let dir = out_dir(args.out);
    std::fs::create_dir_all(&dir)?;
    if args.dump_trajectories {
        write_trajectory_csv(&artifacts, &dir.join("trajectories.csv"))?;
        eprintln!("wrote {}", dir.join("trajectories.csv").display());
    }
    if args.dump_voronoi {
        write_voronoi_csv(
            &artifacts,
            &spec.room,
            config.engine.voronoi_stride_s,
            &dir.join("voronoi.csv"),
        )?;
        eprintln!("wrote {}", dir.join("voronoi.csv").display());
    }
    if args.dump_exposures {
        write_exposure_csv(&artifacts, &dir.join("exposures.csv"))?;
        eprintln!("wrote {}", dir.join("exposures.csv").display());
    }
    println!("{}", serde_json::to_string_pretty(&artifacts.result)?);
    Ok(())
}

fn run_batch_cmd(args: BatchArgs) -> anyhow::Result<()> {
    let config = load_config(&args.config)?;
    let dir = out_dir(args.out);
    let report = run_batch(&config, &dir, args.workers, args.resume)?;
    emit_reports(&report, &config, &dir)?;
    eprintln!(
        "batch complete: {} runs ({} from checkpoints), {} failures -> {}",
        report.results.len(),
        report.reused_checkpoints,
        report.failures.len(),
        dir.display()
    );
    if !report.failures.is_empty() {
        for f in &report.failures {
            eprintln!(
                "  failed scenario {} replicate {}: {}",
                f.scenario_id, f.replicate, f.reason
            );
        }
        bail!("{} runs failed", report.failures.len());
    }
    Ok(())
}

fn analyze_cmd(args: AnalyzeArgs) -> anyhow::Result<()> {
    let table = SampleTable::from_csv(&args.table)?;
    let dir = out_dir(args.out);
    std::fs::create_dir_all(&dir)?;
    let options = AnalysisOptions {
        resamples: args.resamples,
        ci_percent: args.ci,
        seed: args.seed,
        ..AnalysisOptions::default()
    };

    if let Some(model_path) = &args.model {
        // Single custom model: effects only.
        let model = PathModel::from_json(model_path)?;
        let scaled = indoor_epi::analysis::min_max_scale(&table)?;
        let report = indoor_epi::analysis::bootstrap_effects(
            &scaled,
            &model,
            options.resamples,
            options.ci_percent,
            options.seed,
        )?;
        print_effects(&report);
        write_effects_csv(&report, &dir.join("effects_custom.csv"))?;
        eprintln!("wrote {}", dir.join("effects_custom.csv").display());
        return Ok(());
    }

    let report = analyze(&table, &options)?;
    print_analysis(&report);

    write_effects_csv(&report.model_a, &dir.join("effects_model_a.csv"))?;
    write_effects_csv(&report.model_b, &dir.join("effects_model_b.csv"))?;
    write_causal_csv(
        &[&report.causal_c_new, &report.causal_e_ave],
        &dir.join("ate_report.csv"),
    )?;
    std::fs::write(
        dir.join("analysis_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    eprintln!("wrote analysis outputs to {}", dir.display());
    Ok(())
}

fn report_cmd(args: ReportArgs) -> anyhow::Result<()> {
    let table = SampleTable::from_csv(&args.table)?;
    let dir = out_dir(args.out);
    emit_table_reports(&table, &dir)?;
    eprintln!("wrote box-plot summaries to {}", dir.display());
    Ok(())
}

fn config_cmd(args: ConfigArgs) -> anyhow::Result<()> {
    let config = match args.profile.as_str() {
        "desk" => ExperimentConfig::desk_default(),
        "full_scale" => ExperimentConfig::full_scale(),
        other => bail!("unknown profile '{other}' (expected desk or full_scale)"),
    };
    println!("{}", serde_json::to_string_pretty(&config)?);
    Ok(())
}

fn kind_str(kind: EffectKind) -> &'static str {
    match kind {
        EffectKind::Direct => "direct",
        EffectKind::Indirect => "indirect",
        EffectKind::Total => "total",
    }
}

fn print_effects(report: &BootstrapReport) {
    println!(
        "\nEffects on {} ({} resamples, {}% CI; fit: chi2={:.2} df={} GFI={:.2} CFI={:.2} RMSEA={:.2})",
        report.outcome,
        report.resamples,
        report.ci_percent,
        report.fit.chi_square,
        report.fit.df,
        report.fit.gfi,
        report.fit.cfi,
        report.fit.rmsea
    );
    println!(
        "{:<12} {:<9} {:<58} {:>9} {:>9} {:>19} {:>7}",
        "independent", "effect", "path", "estimate", "std.est", "95% CI", "p"
    );
    for e in &report.effects {
        let path = if e.path.is_empty() {
            String::from("-")
        } else {
            e.path.join(" -> ")
        };
        println!(
            "{:<12} {:<9} {:<58} {:>9.3} {:>9.3} [{:>7.3}, {:>7.3}] {:>5.3}{}",
            e.independent,
            kind_str(e.kind),
            path,
            e.estimate,
            e.standardized,
            e.ci_low,
            e.ci_high,
            e.p_value,
            e.stars()
        );
    }
}

fn print_analysis(report: &AnalysisReport) {
    println!("analyzed {} rows", report.rows);
    print_effects(&report.model_a);
    print_effects(&report.model_b);
    for causal in [&report.causal_c_new, &report.causal_e_ave] {
        println!(
            "\nATE of binary sigma_spaces on binary {}: {:.3} (naive {:.3}, propensities [{:.3}, {:.3}], {} clipped)",
            causal.outcome,
            causal.estimate.ate,
            causal.estimate.naive_difference,
            causal.estimate.propensity_min,
            causal.estimate.propensity_max,
            causal.estimate.clipped
        );
        for r in &causal.refutations {
            println!(
                "  {:<22} new estimate {:>7.3} (p={:.3})",
                r.method.name(),
                r.new_estimate,
                r.p_value
            );
        }
    }
}

fn write_effects_csv(report: &BootstrapReport, path: &Path) -> anyhow::Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record([
        "independent",
        "dependent",
        "effect",
        "path",
        "estimate",
        "standardized",
        "ci_low",
        "ci_high",
        "p_value",
        "significant",
    ])?;
    for e in &report.effects {
        wtr.write_record([
            e.independent.clone(),
            report.outcome.clone(),
            kind_str(e.kind).to_string(),
            e.path.join(" -> "),
            format!("{:.6}", e.estimate),
            format!("{:.6}", e.standardized),
            format!("{:.6}", e.ci_low),
            format!("{:.6}", e.ci_high),
            format!("{:.6}", e.p_value),
            e.significant.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_causal_csv(reports: &[&CausalReport], path: &Path) -> anyhow::Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record([
        "outcome",
        "ate",
        "naive_difference",
        "propensity_min",
        "propensity_max",
        "clipped",
        "refute_random_common_cause",
        "p_random_common_cause",
        "refute_placebo_treatment",
        "p_placebo_treatment",
        "refute_data_subset",
        "p_data_subset",
    ])?;
    for report in reports {
        let mut record = vec![
            report.outcome.clone(),
            format!("{:.6}", report.estimate.ate),
            format!("{:.6}", report.estimate.naive_difference),
            format!("{:.6}", report.estimate.propensity_min),
            format!("{:.6}", report.estimate.propensity_max),
            report.estimate.clipped.to_string(),
        ];
        for r in &report.refutations {
            record.push(format!("{:.6}", r.new_estimate));
            record.push(format!("{:.6}", r.p_value));
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

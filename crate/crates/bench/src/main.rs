use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lceopt_bench::config::{BenchConfig, OutputFormat, ScenarioConfig};
use lceopt_bench::output::{episodes_path, write_json, EpisodeWriter, SUMMARY_FILE};
use lceopt_bench::{measure_timing, registry, run_batch, tune, with_scenario, BatchStats, BenchError};
use lceopt_core::{Budget, Variant};
use serde::Serialize;

/// Episode batches, timing study and hyperparameter tuning for the planner.
#[derive(Debug, Parser)]
#[command(name = "lceopt-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a batch of episodes and report return statistics.
    Run(Common),
    /// Measure CPU time per planning step, lazy against basic, over tree depths.
    Timing(Common),
    /// Tune solver hyperparameters with the cross-entropy method.
    Tune(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario id; replaces the configured scenario with its defaults.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Base seed; episode i uses seed + i. Takes precedence over LCEOPT_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Planning budget per step in CPU seconds.
    #[arg(long)]
    budget_s: Option<f64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// 1000 episodes at 1 s per step.
    #[arg(long)]
    full_scale: bool,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(format!("unknown format `{other}` (expected csv or json)")),
    }
}

fn load(args: &Common) -> Result<BenchConfig, BenchError> {
    let mut config = match (&args.config, &args.scenario) {
        (Some(path), _) => BenchConfig::load(path)?,
        (None, Some(id)) => BenchConfig::for_scenario(ScenarioConfig::from_id(id)?),
        (None, None) => return Err(BenchError::Config("either --config or --scenario is required".into())),
    };
    if let (Some(id), Some(_)) = (&args.scenario, &args.config) {
        if id != config.scenario.id() {
            config.scenario = ScenarioConfig::from_id(id)?;
        }
    }
    config.apply_env()?;
    if args.full_scale {
        config.run.episodes = 1000;
        config.solver.budget = Budget::CpuSeconds(1.0);
    }
    if let Some(n) = args.episodes {
        config.run.episodes = n;
    }
    if let Some(seed) = args.seed {
        config.run.base_seed = seed;
    }
    if let Some(s) = args.budget_s {
        config.solver.budget = Budget::CpuSeconds(s);
    }
    if let Some(v) = args.variant {
        config.solver.variant = v;
    }
    if let Some(w) = args.workers {
        config.run.workers = w;
    }
    if let Some(dir) = &args.output {
        config.run.output = Some(dir.clone());
    }
    if let Some(f) = args.format {
        config.run.format = f;
    }
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    scenario: &'a str,
    episodes: usize,
    base_seed: u64,
    solver: &'a lceopt_core::SolverConfig,
    stats: BatchStats,
}

fn cmd_run(config: &BenchConfig) -> Result<(), BenchError> {
    let built = registry::build(&config.scenario)?;
    let mut writer = match &config.run.output {
        Some(dir) => Some(EpisodeWriter::create(dir, config.run.format)?),
        None => None,
    };
    let records = with_scenario!(&built, |s| run_batch(
        s,
        &config.solver,
        config.run.base_seed,
        config.run.episodes,
        config.run.workers,
        |r| match writer.as_mut() {
            Some(w) => w.write(r),
            None => Ok(()),
        },
    ))?;
    let stats = BatchStats::from_records(&records);
    let summary = RunSummary {
        scenario: config.scenario.id(),
        episodes: config.run.episodes,
        base_seed: config.run.base_seed,
        solver: &config.solver,
        stats,
    };
    if let Some(dir) = &config.run.output {
        write_json(&dir.join(SUMMARY_FILE), &summary)?;
        eprintln!("wrote {}", episodes_path(dir, config.run.format).display());
    }
    println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| BenchError::Runtime(e.to_string()))?);
    Ok(())
}

fn cmd_timing(config: &BenchConfig) -> Result<(), BenchError> {
    let built = registry::build(&config.scenario)?;
    let report = with_scenario!(&built, |s| measure_timing(s, &config.solver, &config.timing, config.run.base_seed))?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| BenchError::Runtime(e.to_string()))?;
    if let Some(dir) = &config.run.output {
        write_json(&dir.join("timing.json"), &report)?;
    }
    println!("{text}");
    Ok(())
}

fn cmd_tune(config: &BenchConfig) -> Result<(), BenchError> {
    let built = registry::build(&config.scenario)?;
    let report =
        with_scenario!(&built, |s| tune(s, &config.solver, &config.tune, config.run.base_seed, config.run.workers))?;
    if let Some(dir) = &config.run.output {
        write_json(&dir.join("tune.json"), &report)?;
    }
    println!("{}", serde_json::to_string_pretty(&report.tuned).map_err(|e| BenchError::Runtime(e.to_string()))?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => load(args).and_then(|c| cmd_run(&c)),
        Command::Timing(args) => load(args).and_then(|c| {
            // Clean CPU measurements: one episode at a time.
            let c = BenchConfig { run: lceopt_bench::RunSection { workers: 1, ..c.run.clone() }, ..c };
            cmd_timing(&c)
        }),
        Command::Tune(args) => load(args).and_then(|c| cmd_tune(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lceopt-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rumour::config::{parse_config, ExperimentConfig, ExperimentKind};
use rumour::experiment::{default_out_dir, run_experiment, workers_from_env};
use rumour::Error;

#[derive(Parser)]
#[command(name = "rumour", version, about = "Rumour percolation experiments on the integer line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Basic-model runs: extinction times, cluster sizes, trajectories.
    Simulate(RunArgs),
    /// Survival tail, hazard check, cluster moments and percolation estimate.
    Survival(RunArgs),
    /// Front speed by the law of large numbers and by renewals.
    Speed(RunArgs),
    /// Central limit check for the right front.
    Clt(RunArgs),
    /// Front speed of the reactivation model.
    React(RunArgs),
    /// Percolation verdict from the a_n series.
    Criterion(RunArgs),
    /// Exact small-horizon laws by enumeration.
    Oracle(RunArgs),
    /// Domination probes for the reactivation model.
    Probe(RunArgs),
    /// Validate a config and print its hash without running it.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. Defaults to `output` from the config, then `runs/<kind>-<hash>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Defaults to RUMOUR_WORKERS, then the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Confidence level, overriding the config.
    #[arg(long)]
    level: Option<f64>,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), Error> {
    let mut config = load(&args.config)?;
    if config.kind() != kind {
        return Err(Error::Config(vec![format!(
            "config describes a {} experiment, not {kind}",
            config.kind()
        )]));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(level) = args.level {
        config.level = level;
    }
    config.validate()?;
    let workers = args
        .workers
        .or_else(workers_from_env)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = args
        .out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| default_out_dir(&config));
    let manifest = run_experiment(&config, &out, workers)?;
    println!(
        "{} {} -> {} ({} files, {:.2}s)",
        manifest.kind,
        &manifest.config_hash[..12],
        out.display(),
        manifest.files.len() + 1,
        manifest.wall_time_secs
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run(ExperimentKind::Simulate, a),
        Command::Survival(a) => run(ExperimentKind::Survival, a),
        Command::Speed(a) => run(ExperimentKind::Speed, a),
        Command::Clt(a) => run(ExperimentKind::Clt, a),
        Command::React(a) => run(ExperimentKind::React, a),
        Command::Criterion(a) => run(ExperimentKind::Criterion, a),
        Command::Oracle(a) => run(ExperimentKind::Oracle, a),
        Command::Probe(a) => run(ExperimentKind::Probe, a),
        Command::Check { config } => load(&config).map(|c| println!("{} {}", c.kind(), c.hash())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::InvariantViolation(_) => 3,
                _ => 1,
            })
        }
    }
}

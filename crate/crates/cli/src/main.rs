use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use smd_core::config::{load_config, Experiment};
use smd_core::experiments::run;
use smd_core::Error;

/// Mirror-descent experiment runner.
///
/// Exit status: 0 when every audit passes, 1 when an audit fails,
/// 2 for configuration errors, 3 for I/O and runtime errors.
#[derive(Parser)]
#[command(name = "smd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Property suites for geometries and problems.
    Check(Common),
    /// Simulate trajectories and audit noise-free runs.
    Simulate(Common),
    /// Fit the decay rate of the ensemble-mean ergodic gap.
    Rates(Common),
    /// Large-deviation exceedance frequencies.
    Ldp(Common),
    /// Convergence under vanishing noise.
    Smallnoise(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (optional for `check`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: config `output_dir`, else `out/<command>`].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Override the ensemble base seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(experiment: Experiment, args: Common) -> anyhow::Result<bool> {
    let cfg = match &args.config {
        Some(path) => {
            let cfg = load_config(path)
                .with_context(|| format!("invalid configuration {}", path.display()))?;
            Some(match args.seed {
                Some(s) => cfg.with_seed(s),
                None => cfg,
            })
        }
        None => None,
    };
    let out = args
        .out
        .or_else(|| cfg.as_ref().and_then(|c| c.output_dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    let outcome = run(experiment, cfg.as_ref(), &out, args.workers)?;
    println!("{}", outcome.summary);
    Ok(outcome.passed)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::ConfigParse { .. } | Error::ConfigInvalid(_)) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Check(a) => (Experiment::Check, a),
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Rates(a) => (Experiment::Rates, a),
        Command::Ldp(a) => (Experiment::Ldp, a),
        Command::Smallnoise(a) => (Experiment::Smallnoise, a),
    };
    match execute(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

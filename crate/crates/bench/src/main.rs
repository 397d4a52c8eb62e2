use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use icp_bench::config::{parse_timing, BenchError, ExperimentConfig, ExperimentKind};
use icp_bench::run_experiment;

/// Pose-refinement benchmark harness.
#[derive(Parser, Debug)]
#[command(name = "bench", version, about)]
struct Cli {
    /// Experiment to run: init_noise | depth_noise | model_noise | sequential
    experiment: String,

    /// Flat key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,

    /// Output CSV path (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Timing mode: measured | fixed:<seconds> (overrides the config).
    #[arg(long)]
    timing: Option<String>,

    /// Dynamic Switching threshold (overrides the config).
    #[arg(long)]
    alpha: Option<f64>,

    /// Number of pre-VSD bins (overrides the config).
    #[arg(long)]
    bins: Option<usize>,
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let kind = ExperimentKind::from_name(&cli.experiment)
        .ok_or_else(|| BenchError::Config(format!("unknown experiment {:?}", cli.experiment)))?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(kind, path)?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_path = out;
    }
    if let Some(timing) = &cli.timing {
        cfg.timing = parse_timing(timing).map_err(BenchError::Config)?;
    }
    if let Some(alpha) = cli.alpha {
        if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
            return Err(BenchError::Config("alpha must lie in (0, 1)".into()));
        }
        cfg.alpha = alpha;
    }
    if let Some(bins) = cli.bins {
        if bins == 0 {
            return Err(BenchError::Config("bins must be >= 1".into()));
        }
        cfg.bins = bins;
    }
    run_experiment(&cfg)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ BenchError::Config(_)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}

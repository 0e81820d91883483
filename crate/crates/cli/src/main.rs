use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fredholm_cli::{output::write_artifacts, run, CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "fredholm", version, about = "Density-ratio estimation by regularized Fredholm solvers")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Cross-validate, fit and write weights at the p-sample.
    Estimate,
    /// Cross-validate on a share of the data and score on the rest.
    Cv,
    /// Oracle-tuned error benchmark on analytic densities.
    Simulate,
    /// Weighted vs. unweighted learners under covariate shift.
    Downstream,
    /// PCA-sigmoid or label-based resampling of a CSV.
    Resample,
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let path = args
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let command = match args.command {
        Cmd::Estimate => Command::Estimate,
        Cmd::Cv => Command::Cv,
        Cmd::Simulate => Command::Simulate,
        Cmd::Downstream => Command::Downstream,
        Cmd::Resample => Command::Resample,
    };
    let artifacts = run(command, &cfg)?;
    write_artifacts(&args.out, &artifacts)
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use matern_window::experiments::{
    run_bounds, run_cov_slice, run_error_curve, run_sampler_check, run_verify, ExperimentConfig, Table,
};

/// Matérn window experiments; every verb writes CSV.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Flat `key = value` config file; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Verb {
    /// Covariance slices from the window corner.
    CovSlice,
    /// Max-norm error and bounds against the window size.
    ErrorCurve,
    /// Bound table against the window size.
    Bounds,
    /// Empirical covariance of sampled fields against the spectral one.
    Sample,
    /// Identity suite; exits non-zero if any check fails.
    Verify,
}

fn run(cli: &Cli) -> matern_window::Result<(Table, bool)> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(match cli.verb {
        Verb::CovSlice => (run_cov_slice(&cfg)?, true),
        Verb::ErrorCurve => (run_error_curve(&cfg)?.to_table(), true),
        Verb::Bounds => (run_bounds(&cfg)?, true),
        Verb::Sample => (run_sampler_check(&cfg)?, true),
        Verb::Verify => {
            let report = run_verify(&cfg)?;
            (report.to_table(), report.all_passed())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|(table, ok)| {
        match &cli.out {
            Some(path) => table.save(path)?,
            None => print!("{}", table.to_csv()),
        }
        Ok(ok)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("matern-window: {e}");
            ExitCode::from(2)
        }
    }
}

//! `circle-lab <experiment> [--config FILE] [--out DIR] [--seed N] [--levels N] [--bins N] [--s REAL]`

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use circle_lab_core::cohomology::Verdict;
use circle_lab_core::LabError;
use clap::Parser;
use thiserror::Error;

use config::{Experiment, FileConfig, RunConfig};
use report::{overall, write_outputs, Report};

pub const THREADS_ENV: &str = "CIRCLE_LAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Lab(#[from] LabError),
}

#[derive(Debug, Parser)]
#[command(
    name = "circle-lab",
    version,
    about = "Numerical experiments on multicritical circle maps"
)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random base points.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Exponent of the automorphic measure.
    #[arg(long = "s")]
    s: Option<f64>,
}

impl Args {
    fn overrides(&self) -> FileConfig {
        FileConfig {
            experiment: Some(self.experiment),
            out: self.out.clone(),
            seed: self.seed,
            levels: self.levels,
            bins: self.bins,
            s: self.s,
            ..Default::default()
        }
    }
}

fn configure_threads() -> Result<usize, CliError> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={value} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn execute(args: &Args) -> Result<Verdict, CliError> {
    let threads = configure_threads()?;
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let config = RunConfig::resolve(file.overlay(args.overrides()))?;
    let start = Instant::now();
    let outcome = experiments::run(&config)?;
    let verdict = overall(&outcome.checks);
    let report = Report {
        tool: "circle-lab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.name(),
        seed: config.seed,
        config: config.clone(),
        results: outcome.results,
        checks: outcome.checks,
        verdict,
        files: outcome.series.iter().map(|s| s.file.clone()).collect(),
        threads,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let path = write_outputs(&config.out, &report, &outcome.series)?;
    for check in &report.checks {
        println!(
            "{:<13} {} (measured {:.6e}, threshold {:.6e})",
            check.verdict.as_str(),
            check.name,
            check.measured,
            check.threshold
        );
    }
    println!(
        "{}: {} -> {}",
        config.experiment.name(),
        verdict.as_str(),
        path.display()
    );
    Ok(verdict)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(Verdict::Fail) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("circle-lab: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("circle-lab: {e}");
            ExitCode::from(3)
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use circle_lab_core::cohomology::Verdict;
use circle_lab_core::export::write_csv_file;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// A verdict together with the measured value and the named threshold it was judged against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub measured: f64,
    pub threshold: f64,
    pub rule: String,
}

impl Check {
    /// Pass iff `measured <= threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            verdict: if measured <= threshold {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            measured,
            threshold,
            rule: "measured <= threshold".into(),
        }
    }

    /// Pass iff `measured >= threshold`.
    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            verdict: if measured >= threshold {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            measured,
            threshold,
            rule: "measured >= threshold".into(),
        }
    }

    pub fn with_verdict(name: &str, verdict: Verdict, measured: f64, threshold: f64, rule: &str) -> Self {
        Self {
            name: name.into(),
            verdict,
            measured,
            threshold,
            rule: rule.into(),
        }
    }
}

pub struct CsvSeries {
    pub file: String,
    pub kind: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<String>,
}

pub struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
    pub series: Vec<CsvSeries>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    pub results: Value,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub files: Vec<String>,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

pub fn overall(checks: &[Check]) -> Verdict {
    if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

/// Writes `report.json` and every CSV series into `dir`; returns the report path.
pub fn write_outputs(dir: &Path, report: &Report, series: &[CsvSeries]) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for s in series {
        write_csv_file(
            &dir.join(&s.file),
            s.kind,
            s.columns,
            report.seed,
            s.rows.iter().cloned(),
        )
        .map_err(io)?;
    }
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(io)?;
    Ok(path)
}

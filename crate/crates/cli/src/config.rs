use std::fs;
use std::path::{Path, PathBuf};

use circle_lab_core::GOLDEN_MEAN;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Rotnum,
    Partition,
    Realbounds,
    Automorphic,
    Agreement,
    Lyapunov,
    Sigma,
    OmegaScan,
    Cobound,
    Dk,
    Denjoy,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Rotnum => "rotnum",
            Experiment::Partition => "partition",
            Experiment::Realbounds => "realbounds",
            Experiment::Automorphic => "automorphic",
            Experiment::Agreement => "agreement",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Sigma => "sigma",
            Experiment::OmegaScan => "omega-scan",
            Experiment::Cobound => "cobound",
            Experiment::Dk => "dk",
            Experiment::Denjoy => "denjoy",
        }
    }
}

fn default_k() -> u32 {
    1
}

/// Which circle map to study. A `k_critical_sine` entry gives either `omega`
/// directly or a `target` rotation number to tune to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Rotation {
        rho: f64,
    },
    KCriticalSine {
        #[serde(default = "default_k")]
        k: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<f64>,
    },
}

impl Default for MapSpec {
    fn default() -> Self {
        MapSpec::KCriticalSine {
            k: 1,
            omega: None,
            target: Some(GOLDEN_MEAN),
        }
    }
}

/// Contents of a config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<Experiment>,
    pub map: Option<MapSpec>,
    pub s: Option<f64>,
    pub levels: Option<usize>,
    pub bins: Option<usize>,
    pub grid: Option<usize>,
    pub truncation: Option<usize>,
    pub iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `other` replace keys set here.
    pub fn overlay(self, other: FileConfig) -> FileConfig {
        FileConfig {
            experiment: other.experiment.or(self.experiment),
            map: other.map.or(self.map),
            s: other.s.or(self.s),
            levels: other.levels.or(self.levels),
            bins: other.bins.or(self.bins),
            grid: other.grid.or(self.grid),
            truncation: other.truncation.or(self.truncation),
            iterations: other.iterations.or(self.iterations),
            tolerance: other.tolerance.or(self.tolerance),
            points: other.points.or(self.points),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
        }
    }
}

/// Fully resolved knobs, echoed verbatim in every report. Feeding the echo back
/// as a config file reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub map: MapSpec,
    /// `None` lets experiments that sweep several exponents use their own list.
    pub s: Option<f64>,
    pub levels: usize,
    pub bins: usize,
    pub grid: usize,
    pub truncation: usize,
    pub iterations: usize,
    pub tolerance: f64,
    pub points: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub const DEFAULT_OUT: &str = "circle-lab-out";

impl RunConfig {
    pub fn resolve(file: FileConfig) -> Result<Self, CliError> {
        let experiment = file
            .experiment
            .ok_or_else(|| CliError::Config("no experiment given".into()))?;
        let default_s = match experiment {
            Experiment::Automorphic | Experiment::OmegaScan | Experiment::Sigma => Some(1.0),
            _ => None,
        };
        let levels = match experiment {
            Experiment::Cobound => 12,
            Experiment::Dk => 11,
            Experiment::Lyapunov => 18,
            _ => 10,
        };
        let iterations = match experiment {
            Experiment::Sigma => 100_000,
            Experiment::Rotnum => 2_000_000,
            _ => 20_000,
        };
        let tolerance = match experiment {
            Experiment::Rotnum => 1e-12,
            Experiment::Agreement => 1e-5,
            _ => 1e-6,
        };
        let config = RunConfig {
            experiment,
            map: file.map.unwrap_or_default(),
            s: file.s.or(default_s),
            levels: file.levels.unwrap_or(levels),
            bins: file.bins.unwrap_or(circle_lab_core::measure::DEFAULT_BINS),
            grid: file.grid.unwrap_or(circle_lab_core::cohomology::SUP_GRID),
            truncation: file.truncation.unwrap_or(1000),
            iterations: file.iterations.unwrap_or(iterations),
            tolerance: file.tolerance.unwrap_or(tolerance),
            points: file.points.unwrap_or(10),
            seed: file.seed.unwrap_or(0),
            out: file.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Config(format!("`{key}`: {why}")));
        if let Some(s) = self.s {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("s", "must be a finite real >= 0");
            }
        }
        if self.bins < 2 {
            return bad("bins", "must be at least 2");
        }
        if self.grid < 2 {
            return bad("grid", "must be at least 2");
        }
        if self.points == 0 {
            return bad("points", "must be positive");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance", "must be positive");
        }
        match &self.map {
            MapSpec::Rotation { rho } if !(rho.is_finite()) => bad("map.rho", "must be finite"),
            MapSpec::KCriticalSine { k: 0, .. } => bad("map.k", "must be at least 1"),
            MapSpec::KCriticalSine {
                omega: None,
                target: None,
                ..
            } => bad("map", "k_critical_sine needs `omega` or `target`"),
            MapSpec::KCriticalSine {
                omega: Some(_),
                target: Some(_),
                ..
            } => bad("map", "give either `omega` or `target`, not both"),
            _ => Ok(()),
        }
    }
}

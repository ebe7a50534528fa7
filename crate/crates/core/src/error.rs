use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map has no critical points")]
    NoCriticalPoints,

    #[error("{0} is not a critical point of the map")]
    NotCritical(f64),

    #[error("window around critical point {c} also contains critical point {other}")]
    WindowContainsSecondCritical { c: f64, other: f64 },

    #[error("negative exponent s = {0} is not supported")]
    NegativeExponent(f64),

    #[error("level {level} needs q_{{n+2}} but the expansion only has depth {depth}")]
    LevelBeyondExpansion { level: usize, depth: usize },

    #[error("level {level} beyond precision: orbit points {i} and {j} are {gap:e} apart")]
    BeyondPrecision { level: usize, i: usize, j: usize, gap: f64 },

    #[error("orbit combinatorics do not match the continued fraction at level {level}")]
    CombinatoricsMismatch { level: usize },

    #[error("bisection bracket failed: rho(lo={lo}) and rho(hi={hi}) do not straddle the target")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("normalizing sum underflowed ({0:e})")]
    DegenerateNormalizer(f64),

    #[error("interval collision in Denjoy table at n = {0}; reduce the truncation")]
    IntervalCollision(i64),

    #[error("point {0} is not interior to the base interval")]
    NotInBaseInterval(f64),
}

pub type Result<T> = std::result::Result<T, LabError>;

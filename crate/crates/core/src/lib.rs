//! Numerical laboratory for automorphic measures of multicritical circle maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`map`] evaluates circle-map lifts, orbits and log-derivatives;
//! * [`rotation`] computes rotation numbers, return times and tunes parameters;
//! * [`partition`] builds dynamical partitions and their combinatorial diagnostics;
//! * [`measure`] approximates automorphic measures by orbit sums and by a
//!   discretized transfer operator, and checks the automorphic identity;
//! * [`cohomology`] holds the coboundary approximants and Denjoy–Koksma experiments;
//! * [`denjoy`] realizes a piecewise-affine Denjoy map with a wandering interval.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohomology;
pub mod denjoy;
pub mod error;
pub mod export;
pub mod map;
pub mod measure;
pub mod observable;
pub mod partition;
pub mod rotation;
pub mod summation;

pub use error::{LabError, Result};

/// `(sqrt 5 - 1) / 2`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

/// `sqrt 2 - 1`.
pub const SILVER_MEAN: f64 = 0.414_213_562_373_095_1;

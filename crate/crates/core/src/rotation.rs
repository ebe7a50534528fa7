//! Rotation numbers, closest returns, continued fractions and parameter tuning.
//!
//! Continued fractions follow the convention `rho = 1/(a0 + 1/(a1 + ...))`
//! with `q0 = 1, q1 = a0, q_{n+1} = a_n q_n + q_{n-1}` and
//! `p0 = 0, p1 = 1, p_{n+1} = a_n p_n + p_{n-1}`.

use crate::error::{LabError, Result};
use crate::map::{circle_distance, CircleMap, ParametricFamily};

/// Distances below this are treated as exact returns.
pub const PRECISION_FLOOR: f64 = 1e-14;

/// Past this product `q_n q_{n+1}` the expansion of a binary64 number stops
/// describing the real number it approximates.
const CF_PRECISION_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuedFraction {
    pub partial_quotients: Vec<u64>,
    /// `p_0 ..= p_depth`
    pub p: Vec<u64>,
    /// `q_0 ..= q_depth`
    pub q: Vec<u64>,
    /// The expansion stopped at the binary64 precision floor rather than at `depth`.
    pub truncated: bool,
    /// The input was rational and the expansion terminated exactly.
    pub terminated: bool,
}

impl ContinuedFraction {
    /// Build convergents from a list of partial quotients.
    pub fn from_partial_quotients(partial_quotients: Vec<u64>) -> Result<Self> {
        if partial_quotients.contains(&0) {
            return Err(LabError::InvalidArgument("partial quotients must be positive".into()));
        }
        let n = partial_quotients.len();
        let mut p = vec![0u64; n + 1];
        let mut q = vec![1u64; n + 1];
        if n >= 1 {
            p[1] = 1;
            q[1] = partial_quotients[0];
        }
        for k in 1..n {
            p[k + 1] = partial_quotients[k] * p[k] + p[k - 1];
            q[k + 1] = partial_quotients[k] * q[k] + q[k - 1];
        }
        Ok(Self {
            partial_quotients,
            p,
            q,
            truncated: false,
            terminated: false,
        })
    }

    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// Value of the finite expansion, evaluated from the tail.
    pub fn value(&self) -> f64 {
        let mut x = 0.0f64;
        for &a in self.partial_quotients.iter().rev() {
            x = 1.0 / (a as f64 + x);
        }
        x
    }

    pub fn convergent(&self, n: usize) -> (u64, u64) {
        (self.p[n], self.q[n])
    }

    /// Largest `n` with `q_n <= bound`.
    pub fn level_below(&self, bound: u64) -> usize {
        self.q.iter().rposition(|&q| q <= bound).unwrap_or(0)
    }
}

/// Gauss-map expansion of `rho`, carried out exactly on the dyadic rational
/// that `rho` is in binary64.
pub fn continued_fraction(rho: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(LabError::InvalidArgument(format!("rho = {rho} is not in (0, 1)")));
    }
    if depth == 0 || depth > 40 {
        return Err(LabError::InvalidArgument(format!("depth {depth} must lie in 1..=40")));
    }
    // rho = num / den exactly, den a power of two
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    {
        let mut x = rho;
        let mut scale = 0;
        while x.fract() != 0.0 && scale < 1074 {
            x *= 2.0;
            scale += 1;
        }
        if scale > 126 {
            return Err(LabError::InvalidArgument(format!(
                "rho = {rho:e} is too small to expand"
            )));
        }
        num += x as u128;
        den <<= scale;
    }
    let mut quotients = Vec::new();
    let (mut a, mut b) = (den, num);
    let (mut q_prev, mut q_cur) = (0.0f64, 1.0f64);
    let mut truncated = false;
    let mut terminated = false;
    while quotients.len() < depth {
        let quotient = a / b;
        let remainder = a % b;
        let q_next = quotient as f64 * q_cur + q_prev;
        if q_cur * q_next > CF_PRECISION_LIMIT {
            truncated = true;
            break;
        }
        quotients.push(quotient as u64);
        (q_prev, q_cur) = (q_cur, q_next);
        if remainder == 0 {
            terminated = true;
            break;
        }
        (a, b) = (b, remainder);
    }
    let mut cf = ContinuedFraction::from_partial_quotients(quotients)?;
    cf.truncated = truncated;
    cf.terminated = terminated;
    Ok(cf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosestReturns {
    /// Strictly increasing closest-return times.
    pub times: Vec<u64>,
    /// Nearest integer to `F^q(x0) - x0` at each return time.
    pub displacements: Vec<i64>,
    /// Signed gap `F^q(x0) - x0 - p`.
    pub signed_gaps: Vec<f64>,
    /// `d(f^q x0, x0)`, strictly decreasing.
    pub distances: Vec<f64>,
    /// The scan stopped because a distance reached the precision floor.
    pub floor_reached: bool,
}

/// Times `q` with `d(f^q x0, x0) < d(f^j x0, x0)` for all `0 < j < q`, up to `q_max`.
pub fn closest_returns<M: CircleMap + ?Sized>(map: &M, x0: f64, q_max: u64) -> ClosestReturns {
    let mut out = ClosestReturns {
        times: Vec::new(),
        displacements: Vec::new(),
        signed_gaps: Vec::new(),
        distances: Vec::new(),
        floor_reached: false,
    };
    let mut best = f64::INFINITY;
    let (mut x, mut wraps) = (x0, 0i64);
    for q in 1..=q_max {
        let (nx, dw) = map.step(x);
        x = nx;
        wraps += dw;
        let d = circle_distance(x, x0);
        if d < best {
            best = d;
            let disp = (x - x0) + wraps as f64;
            let p = disp.round() as i64;
            out.times.push(q);
            out.displacements.push(p);
            out.signed_gaps.push(disp - p as f64);
            out.distances.push(d);
            if d <= PRECISION_FLOOR {
                out.floor_reached = true;
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationKind {
    Irrational,
    /// A periodic orbit of type `p/q` was found.
    Rational {
        p: u64,
        q: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationEstimate {
    pub value: f64,
    /// `rho` lies within `value ± error`.
    pub error: f64,
    pub kind: RotationKind,
    pub converged: bool,
    /// Plain `(F^n(x0) - x0) / n` over the whole budget.
    pub raw_average: f64,
    pub returns: ClosestReturns,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rotation number from lift displacement, snapped to the convergent read
/// off the closest returns of `x0`.
pub fn rotation_number<M: CircleMap + ?Sized>(map: &M, x0: f64, budget: u64, tol: f64) -> Result<RotationEstimate> {
    if budget < 1000 {
        return Err(LabError::InvalidArgument(format!("budget {budget} is below 1000")));
    }
    if !(0.0..1.0).contains(&x0) {
        return Err(LabError::InvalidArgument(format!("x0 = {x0} is not in [0, 1)")));
    }
    let returns = closest_returns(map, x0, budget);

    // raw average over the full budget, and the end point for the periodicity test
    let (mut y, mut wraps) = (x0, 0i64);
    for _ in 0..budget {
        let (ny, dw) = map.step(y);
        y = ny;
        wraps += dw;
    }
    let raw_average = ((y - x0) + wraps as f64) / budget as f64;

    let last = returns.times.len().checked_sub(1);
    if let Some(k) = last {
        let (q, p) = (returns.times[k], returns.displacements[k]);
        let exact = returns.floor_reached;
        // an attracting periodic orbit pulls the far end of the orbit onto itself
        let periodic_tail = !exact && {
            let (mut z, mut zw) = (y, 0i64);
            for _ in 0..q {
                let (nz, dw) = map.step(z);
                z = nz;
                zw += dw;
            }
            ((z - y) + zw as f64 - p as f64).abs() <= 1e-12
        };
        if exact || periodic_tail {
            let g = gcd(p.unsigned_abs(), q).max(1);
            let (p, q) = (p.unsigned_abs() / g, q / g);
            return Ok(RotationEstimate {
                value: p as f64 / q as f64,
                error: 0.0,
                kind: RotationKind::Rational { p, q },
                converged: true,
                raw_average,
                returns,
            });
        }
    }

    let (value, error) = match returns.times.len() {
        0 => (raw_average, 1.0 / budget as f64),
        1 => (
            returns.displacements[0] as f64 / returns.times[0] as f64,
            1.0 / returns.times[0] as f64,
        ),
        n => {
            let (q0, p0) = (returns.times[n - 2] as f64, returns.displacements[n - 2] as f64);
            let (q1, p1) = (returns.times[n - 1] as f64, returns.displacements[n - 1] as f64);
            let snapped = p1 / q1;
            // consecutive convergents bracket rho
            let bracket = (snapped - p0 / q0).abs();
            if (raw_average - snapped).abs() <= 1.0 / (2.0 * q1 * q1) || bracket < 1.0 / budget as f64 {
                (snapped, bracket)
            } else {
                (raw_average, 1.0 / budget as f64)
            }
        }
    };
    Ok(RotationEstimate {
        value,
        error,
        kind: RotationKind::Irrational,
        converged: error <= tol,
        raw_average,
        returns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Above,
    /// Consistent with the target down to the deepest convergent probed.
    Within,
}

/// Compare `rho(map)` with the real number whose convergents are given,
/// by the sign of `F^{q_n}(x0) - p_n - x0` at each convergent.
fn compare_with_target<M: CircleMap + ?Sized>(map: &M, target: f64, cf: &ContinuedFraction, x0: f64) -> Side {
    let depth = cf.depth();
    let q_last = cf.q[depth] as usize;
    let (mut x, mut wraps) = (x0, 0i64);
    let mut next = 1usize;
    for step in 1..=q_last {
        let (nx, dw) = map.step(x);
        x = nx;
        wraps += dw;
        while next <= depth && cf.q[next] as usize == step {
            let (p, q) = (cf.p[next] as f64, cf.q[next] as f64);
            let g = (x - x0) + wraps as f64 - p;
            let side = target * q - p;
            let exact_target = side.abs() < 1e-15 * q;
            if exact_target {
                // rational target p/q: equality needs a q-periodic orbit
                if g.abs() <= 1e-13 {
                    return Side::Within;
                }
                return if g > 0.0 { Side::Above } else { Side::Below };
            }
            let g = if g.abs() < 1e-13 { 0.0 } else { g };
            if side > 0.0 && g <= 0.0 {
                return Side::Below;
            }
            if side < 0.0 && g >= 0.0 {
                return Side::Above;
            }
            next += 1;
        }
    }
    Side::Within
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub omega: f64,
    /// Target value reached to within `error_bound`.
    pub achieved: f64,
    pub error_bound: f64,
    pub iterations: usize,
}

/// Bisection on `omega` until `|rho(f_omega) - target| <= tol`.
pub fn tune_omega(family: ParametricFamily, target: f64, tol: f64) -> Result<Tuning> {
    if !(target > 0.0 && target < 1.0) {
        return Err(LabError::InvalidArgument(format!("target {target} is not in (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(LabError::InvalidArgument("tolerance must be positive".into()));
    }
    let full = continued_fraction(target, 40)?;
    // shallowest level whose convergent bracket is below tol
    let mut depth = full.depth();
    for n in 1..full.depth() {
        let bracket = 1.0 / (full.q[n] as f64 * full.q[n + 1] as f64);
        if bracket <= tol {
            depth = n + 1;
            break;
        }
    }
    let cf = ContinuedFraction::from_partial_quotients(full.partial_quotients[..depth].to_vec())?;
    let bracket = if full.terminated && depth == full.depth() {
        0.0
    } else {
        1.0 / (cf.q[depth - 1] as f64 * cf.q[depth] as f64)
    };
    if bracket > tol {
        return Err(LabError::InvalidArgument(format!(
            "tolerance {tol} is below the binary64 resolution of the target"
        )));
    }

    let x0 = 0.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let side_lo = compare_with_target(&family.at(lo), target, &cf, x0);
    let side_hi = compare_with_target(&family.at(hi), target, &cf, x0);
    if side_lo == Side::Within {
        return Ok(Tuning {
            omega: lo,
            achieved: target,
            error_bound: bracket,
            iterations: 0,
        });
    }
    if side_hi == Side::Within {
        return Ok(Tuning {
            omega: hi,
            achieved: target,
            error_bound: bracket,
            iterations: 0,
        });
    }
    if side_lo != Side::Below || side_hi != Side::Above {
        return Err(LabError::BracketFailure { lo, hi });
    }
    for it in 1..=200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match compare_with_target(&family.at(mid), target, &cf, x0) {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
            Side::Within => {
                return Ok(Tuning {
                    omega: mid,
                    achieved: target,
                    error_bound: bracket,
                    iterations: it,
                })
            }
        }
    }
    Err(LabError::BracketFailure { lo, hi })
}

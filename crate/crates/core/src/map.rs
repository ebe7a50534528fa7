//! Circle-map lifts: rigid rotations and the k-critical sine family, orbits
//! with log-space derivative accumulation, and non-flatness diagnostics.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::summation::CompensatedSum;

/// Cumulative log-derivatives beyond this magnitude cannot be exponentiated in binary64.
pub const LOG_SATURATION: f64 = 700.0;

/// Reduce a lift value to `[0, 1)` and return the integer part separately.
#[inline]
pub fn reduce(x: f64) -> (f64, i64) {
    let w = x.floor();
    let mut r = x - w;
    let mut w = w as i64;
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        r -= 1.0;
        w += 1;
    }
    (r, w)
}

/// Length of the shorter arc between two circle coordinates.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Positive (counter-clockwise) arc length from `a` to `b`.
#[inline]
pub fn forward_gap(a: f64, b: f64) -> f64 {
    (b - a).rem_euclid(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub c: f64,
    pub degree: f64,
}

/// Anything that can be iterated as a degree-one circle map.
///
/// `lift` is evaluated on circle coordinates in `[0, 1)`; `deriv` must be the
/// analytic derivative, never a difference quotient.
pub trait CircleMap: Sync {
    fn lift(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    fn critical_points(&self) -> &[CriticalPoint] {
        &[]
    }

    /// One iterate, reduced to `[0, 1)`, with the integer displacement.
    #[inline]
    fn step(&self, x: f64) -> (f64, i64) {
        reduce(self.lift(x))
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        self.step(x).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Rotation,
    KCriticalSine,
    Denjoy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `F(x) = x + rho`.
    Rotation { rho: f64 },
    /// `F(x) = x + omega - sin(2 pi k x) / (2 pi k)`, with `k` cubic critical points.
    CriticalSine { k: u32, omega: f64 },
}

/// A lift of an orientation-preserving circle map together with its
/// analytic derivative and critical-point metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMapLift {
    family: Family,
    critical: Vec<CriticalPoint>,
}

impl CircleMapLift {
    pub fn rotation(rho: f64) -> Self {
        Self {
            family: Family::Rotation { rho },
            critical: Vec::new(),
        }
    }

    pub fn critical_sine(k: u32, omega: f64) -> Result<Self> {
        if k == 0 {
            return Err(LabError::InvalidArgument("k must be at least 1".into()));
        }
        let critical = (0..k)
            .map(|j| CriticalPoint {
                c: j as f64 / k as f64,
                degree: 3.0,
            })
            .collect();
        Ok(Self {
            family: Family::CriticalSine { k, omega },
            critical,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn tag(&self) -> FamilyTag {
        match self.family {
            Family::Rotation { .. } => FamilyTag::Rotation,
            Family::CriticalSine { .. } => FamilyTag::KCriticalSine,
        }
    }

    pub fn parameters(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::new();
        match self.family {
            Family::Rotation { rho } => {
                p.insert("rho".to_string(), rho);
            }
            Family::CriticalSine { k, omega } => {
                p.insert("k".to_string(), k as f64);
                p.insert("omega".to_string(), omega);
            }
        }
        p
    }

    pub fn describe(&self) -> MapDescription {
        MapDescription {
            family: self.tag(),
            parameters: self.parameters(),
            critical_points: self.critical.clone(),
        }
    }
}

impl CircleMap for CircleMapLift {
    #[inline]
    fn lift(&self, x: f64) -> f64 {
        match self.family {
            Family::Rotation { rho } => x + rho,
            Family::CriticalSine { k, omega } => {
                let tk = 2.0 * PI * k as f64;
                x + omega - (tk * x).sin() / tk
            }
        }
    }

    #[inline]
    fn deriv(&self, x: f64) -> f64 {
        match self.family {
            Family::Rotation { .. } => 1.0,
            Family::CriticalSine { k, .. } => {
                // 1 - cos(2 pi k x) written without cancellation near the critical set
                let s = (PI * k as f64 * x).sin();
                2.0 * s * s
            }
        }
    }

    fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }
}

/// Serializable `{family, parameters, critical_points}` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDescription {
    pub family: FamilyTag,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub critical_points: Vec<CriticalPoint>,
}

impl TryFrom<&MapDescription> for CircleMapLift {
    type Error = LabError;

    fn try_from(d: &MapDescription) -> Result<Self> {
        let get = |name: &str| {
            d.parameters
                .get(name)
                .copied()
                .ok_or_else(|| LabError::InvalidArgument(format!("missing parameter `{name}`")))
        };
        match d.family {
            FamilyTag::Rotation => Ok(CircleMapLift::rotation(get("rho")?)),
            FamilyTag::KCriticalSine => {
                let k = get("k")?;
                if k < 1.0 || k.fract() != 0.0 {
                    return Err(LabError::InvalidArgument(format!("k = {k} is not a positive integer")));
                }
                CircleMapLift::critical_sine(k as u32, get("omega")?)
            }
            FamilyTag::Denjoy => Err(LabError::InvalidArgument(
                "Denjoy maps are built with denjoy::build_denjoy".into(),
            )),
        }
    }
}

/// One-parameter families that can be tuned in `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParametricFamily {
    Rotation,
    CriticalSine { k: u32 },
}

impl ParametricFamily {
    pub fn at(&self, omega: f64) -> CircleMapLift {
        match *self {
            ParametricFamily::Rotation => CircleMapLift::rotation(omega),
            ParametricFamily::CriticalSine { k } => CircleMapLift::critical_sine(k.max(1), omega).expect("k >= 1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Saturation {
    /// `Df` vanished exactly at `points[index]`; all later derivatives are exactly zero.
    CriticalHit { index: usize },
    /// The cumulative log-derivative left `[-700, 700]` at this index.
    Overflow { index: usize },
}

/// A finite forward orbit with cumulative log-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    /// `f^i(x0)` reduced to `[0, 1)`, `i = 0..=n`.
    pub points: Vec<f64>,
    /// Integer part of the lift `F^i(x0)`; the lift is `points[i] + wraps[i]`.
    pub wraps: Vec<i64>,
    /// `log Df^i(x0)`; `-inf` after a critical hit.
    pub log_derivs: Vec<f64>,
    pub saturation: Option<Saturation>,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() <= 1
    }

    /// `F^j(x0) - F^i(x0)` computed from reduced points, without large lift values.
    #[inline]
    pub fn lift_gap(&self, i: usize, j: usize) -> f64 {
        (self.points[j] - self.points[i]) + (self.wraps[j] - self.wraps[i]) as f64
    }

    /// `F^i(x0) - x0`.
    #[inline]
    pub fn displacement(&self, i: usize) -> f64 {
        self.lift_gap(0, i)
    }

    /// `Df^i(x0)`; zero after a critical hit.
    pub fn deriv(&self, i: usize) -> f64 {
        self.log_derivs[i].exp()
    }
}

/// Iterate `map` `n` times from `x0`, accumulating `log Df` with compensated summation.
pub fn eval_orbit<M: CircleMap + ?Sized>(map: &M, x0: f64, n: usize) -> Result<OrbitTrace> {
    if n == 0 {
        return Err(LabError::InvalidArgument("orbit length must be positive".into()));
    }
    if !(0.0..1.0).contains(&x0) {
        return Err(LabError::InvalidArgument(format!("x0 = {x0} is not in [0, 1)")));
    }
    let mut points = Vec::with_capacity(n + 1);
    let mut wraps = Vec::with_capacity(n + 1);
    let mut log_derivs = Vec::with_capacity(n + 1);
    let mut saturation = None;
    let mut acc = CompensatedSum::new();
    let mut hit = false;

    let (mut x, mut w) = (x0, 0i64);
    points.push(x);
    wraps.push(w);
    log_derivs.push(0.0);
    for i in 0..n {
        let d = map.deriv(x);
        if hit || d <= 0.0 {
            if !hit {
                hit = true;
                saturation.get_or_insert(Saturation::CriticalHit { index: i });
            }
            log_derivs.push(f64::NEG_INFINITY);
        } else {
            acc.add(d.ln());
            let total = acc.value();
            if total.abs() > LOG_SATURATION && saturation.is_none() {
                saturation = Some(Saturation::Overflow { index: i + 1 });
            }
            log_derivs.push(total);
        }
        let (nx, dw) = map.step(x);
        x = nx;
        w += dw;
        points.push(x);
        wraps.push(w);
    }
    Ok(OrbitTrace {
        points,
        wraps,
        log_derivs,
        saturation,
    })
}

/// Only the lifted positions, no derivative bookkeeping.
pub fn orbit_points<M: CircleMap + ?Sized>(map: &M, x0: f64, n: usize) -> (Vec<f64>, Vec<i64>) {
    let mut points = Vec::with_capacity(n + 1);
    let mut wraps = Vec::with_capacity(n + 1);
    let (mut x, mut w) = (x0, 0i64);
    points.push(x);
    wraps.push(w);
    for _ in 0..n {
        let (nx, dw) = map.step(x);
        x = nx;
        w += dw;
        points.push(x);
        wraps.push(w);
    }
    (points, wraps)
}

/// `x ∈ [0, 1)` with `f(x) = y` on the circle, by bisection on the monotone lift.
pub fn preimage<M: CircleMap + ?Sized>(map: &M, y: f64) -> f64 {
    let base = map.lift(0.0);
    let target = base + (y - base).rem_euclid(1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..128 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if map.lift(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A point `x` with `f^depth(x) = y`.
pub fn backward_orbit<M: CircleMap + ?Sized>(map: &M, y: f64, depth: usize) -> f64 {
    (0..depth).fold(y, |z, _| preimage(map, z))
}

/// `log Df^n(x)` for a single point.
pub fn log_deriv_power<M: CircleMap + ?Sized>(map: &M, x: f64, n: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut y = x;
    for _ in 0..n {
        let d = map.deriv(y);
        if d <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc.add(d.ln());
        y = map.eval(y);
    }
    acc.value()
}

/// Result of fitting the local power law `Df(x) ~ |x - c|^(d-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonFlatReport {
    pub critical_point: f64,
    pub listed_degree: f64,
    pub degree_estimate: f64,
    /// Largest observed `Df(x) |J| / (3 d |f(J)|)` over sampled `x in J`.
    pub max_ratio: f64,
    pub samples: usize,
}

/// Estimate the degree of the critical point `c` from a log-log fit over
/// `[c - window, c + window]`, and check `Df(x) <= 3d |f(J)| / |J|` on
/// subintervals `J` of that window.
pub fn verify_nonflat<M: CircleMap + ?Sized>(map: &M, c: f64, window: f64) -> Result<NonFlatReport> {
    let crit = map.critical_points();
    if crit.is_empty() {
        return Err(LabError::NoCriticalPoints);
    }
    if !(window > 0.0 && window < 0.5) {
        return Err(LabError::InvalidArgument(format!(
            "window {window} must lie in (0, 0.5)"
        )));
    }
    let this = crit
        .iter()
        .find(|p| circle_distance(p.c, c) < 1e-14)
        .ok_or(LabError::NotCritical(c))?;
    if let Some(other) = crit
        .iter()
        .find(|p| circle_distance(p.c, c) >= 1e-14 && circle_distance(p.c, c) <= window)
    {
        return Err(LabError::WindowContainsSecondCritical { c, other: other.c });
    }

    // log-log regression over three decades on both sides of c
    const PER_SIDE: usize = 64;
    let mut xs = Vec::with_capacity(2 * PER_SIDE);
    let mut ys = Vec::with_capacity(2 * PER_SIDE);
    for j in 0..PER_SIDE {
        let r = window * 10f64.powf(-3.0 + 3.0 * j as f64 / (PER_SIDE - 1) as f64);
        for side in [-1.0, 1.0] {
            let x = (c + side * r).rem_euclid(1.0);
            let d = map.deriv(x);
            if d > 0.0 {
                xs.push(r.ln());
                ys.push(d.ln());
            }
        }
    }
    let slope = least_squares_slope(&xs, &ys);

    // Df(x) <= 3d |f(J)| / |J| on a mesh of subintervals J of the window
    const MESH: usize = 40;
    let d = this.degree;
    let node = |i: usize| c - window + 2.0 * window * i as f64 / MESH as f64;
    let mut max_ratio = 0.0f64;
    for a in 0..MESH {
        for b in (a + 1)..=MESH {
            let (ja, jb) = (node(a), node(b));
            let image = map.lift(jb.rem_euclid(1.0)) - map.lift(ja.rem_euclid(1.0)) + (jb.floor() - ja.floor());
            if image <= 0.0 {
                continue;
            }
            for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let x = (ja + t * (jb - ja)).rem_euclid(1.0);
                let ratio = map.deriv(x) * (jb - ja) / (3.0 * d * image);
                max_ratio = max_ratio.max(ratio);
            }
        }
    }

    Ok(NonFlatReport {
        critical_point: this.c,
        listed_degree: d,
        degree_estimate: slope + 1.0,
        max_ratio,
        samples: xs.len(),
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

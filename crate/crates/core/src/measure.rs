//! Automorphic measures of exponent `s`: orbit-sum approximants, a discretized
//! transfer operator with Cesàro averaging, and the diagnostics that check the
//! automorphic identity `∫ φ dν = ∫ (φ∘f) (Df)^s dν` and its consequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::map::{eval_orbit, CircleMap, OrbitTrace};
use crate::observable::{Observable, TestFunction, TestFunctionSet};
use crate::partition::{CircleInterval, DynamicalPartition};
use crate::rotation::ContinuedFraction;
use crate::summation::{compensated_sum, log_sum_exp, CompensatedSum};

/// Default number of bins of the transfer-operator grid.
pub const DEFAULT_BINS: usize = 1 << 14;

/// Resolution at which measures from different constructions are compared.
pub const COMPARE_BINS: usize = 64;

/// Total mass must stay within this of 1.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `(Df)^s` with `(Df)^0 = 1` even where `Df = 0`.
#[inline]
pub fn deriv_power(d: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        d.powf(s)
    }
}

pub(crate) fn check_exponent(s: f64) -> Result<()> {
    if s < 0.0 || !s.is_finite() {
        return Err(LabError::NegativeExponent(s));
    }
    Ok(())
}

/// A probability measure on the circle: weighted atoms or a piecewise-constant density.
#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteMeasure {
    Atomic {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    /// Density values on `B` equal bins; `Σ values / B = 1`.
    Grid {
        values: Vec<f64>,
    },
}

impl DiscreteMeasure {
    pub fn uniform(bins: usize) -> Self {
        DiscreteMeasure::Grid {
            values: vec![1.0; bins],
        }
    }

    pub fn dirac(x: f64) -> Self {
        DiscreteMeasure::Atomic {
            points: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            DiscreteMeasure::Atomic { weights, .. } => compensated_sum(weights.iter().copied()),
            DiscreteMeasure::Grid { values } => compensated_sum(values.iter().copied()) / values.len() as f64,
        }
    }

    pub fn is_normalized(&self) -> bool {
        let nonneg = match self {
            DiscreteMeasure::Atomic { weights, .. } => weights.iter().all(|&w| w >= 0.0),
            DiscreteMeasure::Grid { values } => values.iter().all(|&v| v >= 0.0),
        };
        nonneg && (self.total_mass() - 1.0).abs() <= MASS_TOLERANCE
    }

    /// `∫ φ dν`; midpoint rule per bin for grids.
    pub fn integrate<O: Observable + ?Sized>(&self, phi: &O) -> f64 {
        match self {
            DiscreteMeasure::Atomic { points, weights } => {
                compensated_sum(points.iter().zip(weights).map(|(&x, &w)| w * phi.value(x)))
            }
            DiscreteMeasure::Grid { values } => {
                let b = values.len() as f64;
                compensated_sum(
                    values
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| v * phi.value((i as f64 + 0.5) / b)),
                ) / b
            }
        }
    }

    /// Mass of a closed arc (atoms on the boundary count).
    pub fn arc_mass(&self, arc: &CircleInterval) -> f64 {
        match self {
            DiscreteMeasure::Atomic { points, weights } => compensated_sum(
                points
                    .iter()
                    .zip(weights)
                    .filter(|(&x, _)| arc.contains(x))
                    .map(|(_, &w)| w),
            ),
            DiscreteMeasure::Grid { values } => {
                if arc.length >= 1.0 {
                    return self.total_mass();
                }
                let b = values.len();
                let bf = b as f64;
                let (start, end) = (arc.start * bf, arc.end() * bf);
                let first = start.floor() as i64;
                let last = end.floor() as i64;
                let mut acc = CompensatedSum::new();
                for k in first..=last {
                    let lo = start.max(k as f64);
                    let hi = end.min((k + 1) as f64);
                    if hi > lo {
                        acc.add(values[k.rem_euclid(b as i64) as usize] * (hi - lo));
                    }
                }
                acc.value() / bf
            }
        }
    }

    /// Masses of `resolution` equal bins.
    pub fn binned_masses(&self, resolution: usize) -> Vec<f64> {
        let mut out = vec![0.0; resolution];
        match self {
            DiscreteMeasure::Atomic { points, weights } => {
                for (&x, &w) in points.iter().zip(weights) {
                    let k = ((x * resolution as f64) as usize).min(resolution - 1);
                    out[k] += w;
                }
            }
            DiscreteMeasure::Grid { values } => {
                let b = values.len();
                if b % resolution == 0 {
                    let per = b / resolution;
                    for (k, chunk) in values.chunks(per).enumerate() {
                        out[k] = compensated_sum(chunk.iter().copied()) / b as f64;
                    }
                } else {
                    for (k, slot) in out.iter_mut().enumerate() {
                        let arc = CircleInterval::new(k as f64 / resolution as f64, 1.0 / resolution as f64);
                        *slot = self.arc_mass(&arc);
                    }
                }
            }
        }
        out
    }

    /// Piecewise-constant density on `bins` equal bins.
    pub fn to_grid(&self, bins: usize) -> DiscreteMeasure {
        let masses = self.binned_masses(bins);
        DiscreteMeasure::Grid {
            values: masses.into_iter().map(|m| m * bins as f64).collect(),
        }
    }
}

/// `Σ |ν(J_k) - μ(J_k)|` over `resolution` equal bins `J_k`.
pub fn l1_distance(a: &DiscreteMeasure, b: &DiscreteMeasure, resolution: usize) -> f64 {
    let ma = a.binned_masses(resolution);
    let mb = b.binned_masses(resolution);
    compensated_sum(ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()))
}

/// The atomic measure `(1/S_n) Σ_{i<q} (Df^i(x))^s δ_{f^i(x)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSumMeasure {
    pub measure: DiscreteMeasure,
    pub s: f64,
    pub q: usize,
    pub base: f64,
    /// `log S_n(x)`.
    pub log_normalizer: f64,
    /// `f^q(x)`.
    pub endpoint: f64,
    /// `log Df^q(x)`.
    pub log_deriv_end: f64,
    /// Atoms whose weight vanished because the orbit hit a critical point.
    pub zero_weights: usize,
    pub trace: OrbitTrace,
}

impl OrbitSumMeasure {
    pub fn normalizer(&self) -> f64 {
        self.log_normalizer.exp()
    }

    /// The telescoped value `|φ(x) - φ(f^q x) (Df^q x)^s| / S_n(x)` of the automorphic defect.
    pub fn telescoped_defect<O: Observable + ?Sized>(&self, phi: &O) -> f64 {
        let tail = if self.s == 0.0 {
            phi.value(self.endpoint)
        } else {
            phi.value(self.endpoint) * (self.s * self.log_deriv_end).exp()
        };
        (phi.value(self.base) - tail).abs() / self.normalizer()
    }
}

/// Orbit-sum measure over the first `q` iterates of `x`, weights formed in log space.
pub fn orbit_sum_measure<M: CircleMap + ?Sized>(map: &M, x: f64, s: f64, q: usize) -> Result<OrbitSumMeasure> {
    check_exponent(s)?;
    let trace = eval_orbit(map, x, q)?;
    let log_weights: Vec<f64> = trace.log_derivs[..q]
        .iter()
        .map(|&l| if s == 0.0 { 0.0 } else { s * l })
        .collect();
    let log_normalizer = log_sum_exp(&log_weights);
    if !log_normalizer.is_finite() {
        return Err(LabError::DegenerateNormalizer(log_normalizer));
    }
    let weights: Vec<f64> = log_weights.iter().map(|&l| (l - log_normalizer).exp()).collect();
    let zero_weights = weights.iter().filter(|&&w| w == 0.0).count();
    let points = trace.points[..q].to_vec();
    Ok(OrbitSumMeasure {
        measure: DiscreteMeasure::Atomic { points, weights },
        s,
        q,
        base: x,
        log_normalizer,
        endpoint: trace.points[q],
        log_deriv_end: trace.log_derivs[q],
        zero_weights,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    /// `(name, |∫ φ dν - ∫ (φ∘f)(Df)^s dν|)` per test function.
    pub per_function: Vec<(String, f64)>,
    pub max: f64,
}

fn defect_for<M: CircleMap + ?Sized>(nu: &DiscreteMeasure, map: &M, s: f64, phi: &TestFunction) -> f64 {
    match nu {
        DiscreteMeasure::Atomic { points, weights } => compensated_sum(points.iter().zip(weights).map(|(&x, &w)| {
            let pulled = phi.value(map.eval(x)) * deriv_power(map.deriv(x), s);
            w * (phi.value(x) - pulled)
        }))
        .abs(),
        DiscreteMeasure::Grid { values } => {
            let b = values.len() as f64;
            let total: f64 = values
                .par_iter()
                .enumerate()
                .map(|(i, &v)| {
                    let x = (i as f64 + 0.5) / b;
                    v * (phi.value(x) - phi.value(map.eval(x)) * deriv_power(map.deriv(x), s))
                })
                .collect::<Vec<_>>()
                .into_iter()
                .collect::<CompensatedSum>()
                .value();
            (total / b).abs()
        }
    }
}

/// `max_φ |∫ φ dν - ∫ (φ∘f)(Df)^s dν|` over the test set.
pub fn automorphic_defect<M: CircleMap + ?Sized>(
    nu: &DiscreteMeasure,
    map: &M,
    s: f64,
    tests: &TestFunctionSet,
) -> Result<DefectReport> {
    check_exponent(s)?;
    let per_function: Vec<(String, f64)> = tests
        .functions
        .iter()
        .map(|phi| (phi.name(), defect_for(nu, map, s, phi)))
        .collect();
    let max = per_function.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    Ok(DefectReport { per_function, max })
}

/// Ulam-type discretization of `ν ↦ f_*((Df)^s ν) / ∫ (Df)^s dν` on `B` bins.
///
/// Each source bin carries `density · ∫_bin (Df)^s` and spreads it uniformly
/// over the image interval `f(bin)`. The operator is stored in gather form
/// (per target bin, its sources), so application is parallel over targets and
/// bit-reproducible regardless of the thread count.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    bins: usize,
    s: f64,
    offsets: Vec<usize>,
    sources: Vec<u32>,
    coefs: Vec<f64>,
}

const GAUSS3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// How a source bin's weighted mass is split among target bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// Bin mass `∫_bin (Df)^s` (midpoint rule, 3-point Gauss at critical bins),
    /// spread over `f(bin)` proportionally to overlap with each target bin.
    Overlap,
    /// Ulam projection: the bin is cut at preimages of target-bin edges and
    /// `∫ (Df)^s` is integrated by 3-point Gauss on every piece. Exact
    /// pushforward of piecewise-constant densities at `s = 0`.
    #[default]
    Galerkin,
}

fn gauss3<F: Fn(f64) -> f64>(a: f64, b: f64, g: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GAUSS3_NODES
        .iter()
        .zip(GAUSS3_WEIGHTS)
        .map(|(&t, w)| w * g(mid + half * t))
        .sum::<f64>()
        * half
}

/// `x ∈ [lo, hi]` with `lift(x) = target`, for a monotone lift.
fn lift_preimage<M: CircleMap + ?Sized>(map: &M, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if map.lift(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl TransferOperator {
    pub fn new<M: CircleMap + ?Sized>(map: &M, s: f64, bins: usize) -> Result<Self> {
        Self::with_scheme(map, s, bins, Discretization::default())
    }

    pub fn with_scheme<M: CircleMap + ?Sized>(map: &M, s: f64, bins: usize, scheme: Discretization) -> Result<Self> {
        check_exponent(s)?;
        if bins < 2 || bins > u32::MAX as usize {
            return Err(LabError::InvalidArgument(format!("bin count {bins} out of range")));
        }
        let bf = bins as f64;
        let h = 1.0 / bf;
        let critical: Vec<f64> = map.critical_points().iter().map(|c| c.c).collect();
        let weight_density = |x: f64| deriv_power(map.deriv(x), s);

        let contributions: Vec<Vec<(u32, u32, f64)>> = (0..bins)
            .into_par_iter()
            .map(|i| {
                let a = i as f64 * h;
                let b = (i + 1) as f64 * h;
                let u = map.lift(a);
                let v = u + (map.lift(b) - u).max(0.0);
                let length = v - u;
                let target = |k: i64| k.rem_euclid(bins as i64) as u32;
                let mut out = Vec::new();
                if length <= 0.0 || !length.is_finite() {
                    out.push((target((u * bf).floor() as i64), i as u32, gauss3(a, b, weight_density)));
                    return out;
                }
                let first = (u * bf).floor() as i64;
                let last = ((v * bf).ceil() as i64 - 1).max(first);
                match scheme {
                    Discretization::Overlap => {
                        let has_critical = critical.iter().any(|&c| {
                            let c = c.rem_euclid(1.0);
                            (c >= a && c <= b) || (i == bins - 1 && c == 0.0)
                        });
                        let weight = if has_critical {
                            gauss3(a, b, weight_density)
                        } else {
                            h * weight_density(a + 0.5 * h)
                        };
                        for k in first..=last {
                            let lo = u.max(k as f64 * h);
                            let hi = v.min((k + 1) as f64 * h);
                            if hi > lo {
                                out.push((target(k), i as u32, weight * (hi - lo) / length));
                            }
                        }
                    }
                    Discretization::Galerkin => {
                        let mut left = a;
                        for k in first..=last {
                            let edge = (k + 1) as f64 * h;
                            let right = if edge < v { lift_preimage(map, edge, left, b) } else { b };
                            if right > left {
                                out.push((target(k), i as u32, gauss3(left, right, weight_density)));
                            }
                            left = right;
                        }
                    }
                }
                out
            })
            .collect();

        // counting sort into gather form; sources stay in ascending order per target
        let mut counts = vec![0usize; bins + 1];
        for list in &contributions {
            for &(t, _, _) in list {
                counts[t as usize + 1] += 1;
            }
        }
        for k in 0..bins {
            counts[k + 1] += counts[k];
        }
        let offsets = counts.clone();
        let total = offsets[bins];
        let mut sources = vec![0u32; total];
        let mut coefs = vec![0.0; total];
        let mut cursor = counts;
        for list in &contributions {
            for &(t, src, c) in list {
                let slot = cursor[t as usize];
                sources[slot] = src;
                coefs[slot] = c;
                cursor[t as usize] += 1;
            }
        }
        Ok(Self {
            bins,
            s,
            offsets,
            sources,
            coefs,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    /// One application to a density vector; returns the renormalized density.
    pub fn apply(&self, density: &[f64]) -> Result<Vec<f64>> {
        self.apply_with_normalizer(density).map(|(d, _)| d)
    }

    /// One application, also returning the normalizer `∫ (Df)^s dν`.
    pub fn apply_with_normalizer(&self, density: &[f64]) -> Result<(Vec<f64>, f64)> {
        if density.len() != self.bins {
            return Err(LabError::InvalidArgument(format!(
                "density has {} bins, operator has {}",
                density.len(),
                self.bins
            )));
        }
        let masses: Vec<f64> = (0..self.bins)
            .into_par_iter()
            .with_min_len(256)
            .map(|t| {
                let range = self.offsets[t]..self.offsets[t + 1];
                self.sources[range.clone()]
                    .iter()
                    .zip(&self.coefs[range])
                    .map(|(&src, &c)| c * density[src as usize])
                    .sum::<f64>()
            })
            .collect();
        let total = compensated_sum(masses.iter().copied());
        if !(total > 1e-300) {
            return Err(LabError::DegenerateNormalizer(total));
        }
        let scale = self.bins as f64 / total;
        Ok((masses.into_iter().map(|m| m * scale).collect(), total))
    }
}

/// One transfer step applied to a grid measure.
pub fn transfer_step<M: CircleMap + ?Sized>(nu: &DiscreteMeasure, map: &M, s: f64) -> Result<DiscreteMeasure> {
    let DiscreteMeasure::Grid { values } = nu else {
        return Err(LabError::InvalidArgument("transfer_step needs a grid measure".into()));
    };
    let op = TransferOperator::new(map, s, values.len())?;
    Ok(DiscreteMeasure::Grid {
        values: op.apply(values)?,
    })
}

/// `L¹` distance between two densities on the same grid.
pub fn density_l1(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs())) / a.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutomorphicSolution {
    pub density: DiscreteMeasure,
    /// `(iteration, ‖U A - A‖₁)` for the running Cesàro average `A`.
    pub residual_series: Vec<(usize, f64)>,
    /// Final `‖U A - A‖₁`.
    pub residual: f64,
    /// `L¹` change of the Cesàro average at the last step.
    pub last_change: f64,
    pub iterations: usize,
    pub converged: bool,
    pub defect: DefectReport,
}

/// Cesàro averages of transfer iterates from the uniform density, stopped when
/// successive averages differ by at most `tol` in `L¹`.
///
/// The normalized iterates `ν_k` are averaged with weights
/// `Π_{j<k} λ_j / λ̄^k`, where `λ_j` are the step normalizers and `λ̄` their
/// geometric mean over `iters` steps. This is the plain Cesàro mean of the
/// linear iterates `L^k ν_0 / λ̄^k`, so oscillating normalizers (`s ∉ {0, 1}`)
/// do not bias the average. For `s ∈ {0, 1}` all weights are one.
pub fn solve_automorphic<M: CircleMap + ?Sized>(
    map: &M,
    s: f64,
    bins: usize,
    iters: usize,
    tol: f64,
) -> Result<AutomorphicSolution> {
    let op = TransferOperator::new(map, s, bins)?;
    let uniform = vec![1.0; bins];

    let mut log_norms = Vec::with_capacity(iters);
    let mut current = uniform.clone();
    for _ in 0..iters {
        let (next, norm) = op.apply_with_normalizer(&current)?;
        log_norms.push(norm.ln());
        current = next;
    }
    let mean_log = if iters > 0 {
        compensated_sum(log_norms.iter().copied()) / iters as f64
    } else {
        0.0
    };
    let mut log_weights = Vec::with_capacity(iters + 1);
    let mut acc = CompensatedSum::new();
    log_weights.push(0.0);
    for &l in &log_norms {
        acc.add(l - mean_log);
        log_weights.push(acc.value());
    }
    let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut current = uniform;
    let mut average = current.clone();
    let mut total_weight = (log_weights[0] - shift).exp();
    let mut residual_series = Vec::new();
    let every = (iters / 64).max(1);
    let mut last_change = f64::INFINITY;
    let mut done = 0;
    for (k, &log_w) in log_weights.iter().enumerate().skip(1).take(iters) {
        current = op.apply(&current)?;
        let w = (log_w - shift).exp();
        total_weight += w;
        let rate = w / total_weight;
        let change = compensated_sum(current.iter().zip(&average).map(|(c, a)| (c - a).abs())) * rate / bins as f64;
        average
            .par_iter_mut()
            .zip(&current)
            .for_each(|(a, &c)| *a += (c - *a) * rate);
        last_change = change;
        done = k;
        let stop = change <= tol;
        if k % every == 0 || stop || k == iters {
            let image = op.apply(&average)?;
            residual_series.push((k, density_l1(&image, &average)));
        }
        if stop {
            break;
        }
    }
    let residual = residual_series.last().map(|r| r.1).unwrap_or(0.0);
    let stalled = {
        let n = residual_series.len();
        n >= 4 && {
            let start = residual_series[n - 1 - n / 4].1;
            residual_series[n - 1].1 >= start && residual_series[n - 1].1 > tol
        }
    };
    let density = DiscreteMeasure::Grid { values: average };
    let defect = automorphic_defect(&density, map, s, &TestFunctionSet::default())?;
    Ok(AutomorphicSolution {
        density,
        residual_series,
        residual,
        last_change,
        iterations: done,
        converged: last_change <= tol && !stalled,
        defect,
    })
}

/// `∫ log Df dμ`.
pub fn lyapunov_integral<M: CircleMap + ?Sized>(map: &M, mu: &DiscreteMeasure) -> f64 {
    match mu {
        DiscreteMeasure::Atomic { points, weights } => {
            let mut acc = CompensatedSum::new();
            for (&x, &w) in points.iter().zip(weights) {
                if w == 0.0 {
                    continue;
                }
                let d = map.deriv(x);
                if d <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc.add(w * d.ln());
            }
            acc.value()
        }
        DiscreteMeasure::Grid { values } => {
            let b = values.len() as f64;
            compensated_sum(
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * map.deriv((i as f64 + 0.5) / b).ln()),
            ) / b
        }
    }
}

/// `Ĉ₁ = max_{m <= level} max_{grid} Df^{q_m}(x)`, an empirical surrogate for
/// the uniform bound on `Df^{q_n}`.
pub fn empirical_c1<M: CircleMap + ?Sized>(map: &M, cf: &ContinuedFraction, level: usize, grid: usize) -> f64 {
    let level = level.min(cf.depth());
    let times: Vec<usize> = (0..=level).map(|m| cf.q[m] as usize).collect();
    let horizon = *times.iter().max().unwrap_or(&1);
    let best_log = (0..grid)
        .into_par_iter()
        .map(|g| {
            let mut y = (g as f64 + 0.5) / grid as f64;
            let mut acc = CompensatedSum::new();
            let mut best = f64::NEG_INFINITY;
            for i in 1..=horizon {
                let d = map.deriv(y);
                if d <= 0.0 {
                    break;
                }
                acc.add(d.ln());
                y = map.eval(y);
                if times.contains(&i) {
                    best = best.max(acc.value());
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    best_log.exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSeries {
    /// `Σ_N(x)` for `N = 0..=len`.
    pub partial_sums: Vec<f64>,
    pub saturated: bool,
}

/// `Σ_N(x) = Σ_{n <= N} (Df^n(x))^s`.
pub fn sigma_partial<M: CircleMap + ?Sized>(map: &M, x: f64, s: f64, n: usize) -> Result<SigmaSeries> {
    check_exponent(s)?;
    if n > 1_000_000 {
        return Err(LabError::InvalidArgument(format!("N = {n} exceeds 10^6")));
    }
    let trace = eval_orbit(map, x, n.max(1))?;
    let mut acc = CompensatedSum::new();
    let mut saturated = false;
    let mut partial_sums = Vec::with_capacity(n + 1);
    for &l in &trace.log_derivs[..=n] {
        let term = if s == 0.0 { 1.0 } else { (s * l).exp() };
        if !term.is_finite() || !acc.value().is_finite() {
            saturated = true;
            partial_sums.push(f64::MAX);
            continue;
        }
        acc.add(term);
        partial_sums.push(acc.value());
    }
    Ok(SigmaSeries {
        partial_sums,
        saturated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaScan {
    pub level: usize,
    pub long_max: f64,
    pub long_min: f64,
    pub short_max: f64,
    pub short_min: f64,
    /// `max ω(short) / min ω(long)`.
    pub short_to_long_max: f64,
    /// Largest of the two same-type spreads and the short-to-long ratio.
    pub b_hat: f64,
    pub skipped: usize,
}

impl OmegaScan {
    pub fn long_spread(&self) -> f64 {
        self.long_max / self.long_min
    }

    pub fn short_spread(&self) -> f64 {
        self.short_max / self.short_min
    }
}

/// `ω(Δ) = ν(Δ) / |Δ|^s` over the atoms of `P`, split by atom type.
pub fn omega_ratio_scan(nu: &DiscreteMeasure, partition: &DynamicalPartition, s: f64) -> Result<OmegaScan> {
    check_exponent(s)?;
    let mut long = (f64::NEG_INFINITY, f64::INFINITY);
    let mut short = (f64::NEG_INFINITY, f64::INFINITY);
    let mut skipped = 0;
    for (atom, label) in partition.atoms.iter().zip(&partition.labels) {
        let mass = nu.arc_mass(atom);
        if mass <= 0.0 {
            skipped += 1;
            continue;
        }
        let omega = mass / atom.length.powf(s);
        let slot = if label.is_long() { &mut long } else { &mut short };
        slot.0 = slot.0.max(omega);
        slot.1 = slot.1.min(omega);
    }
    let short_to_long_max = short.0 / long.1;
    let b_hat = (long.0 / long.1).max(short.0 / short.1).max(short_to_long_max);
    Ok(OmegaScan {
        level: partition.level,
        long_max: long.0,
        long_min: long.1,
        short_max: short.0,
        short_min: short.1,
        short_to_long_max,
        b_hat,
        skipped,
    })
}

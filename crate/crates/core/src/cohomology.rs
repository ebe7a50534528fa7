//! Approximate coboundaries `ŵ_k` and Birkhoff-sum deviation experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::map::{eval_orbit, CircleMap};
use crate::observable::{Observable, SampledFunction};
use crate::partition::build_partition;
use crate::rotation::ContinuedFraction;
use crate::summation::CompensatedSum;

/// Default sup-norm grid size.
pub const SUP_GRID: usize = 1 << 13;

/// `(1/q) Σ_{i<q} Df^i(x)`.
fn mean_derivative<M: CircleMap + ?Sized>(map: &M, x: f64, q: usize) -> f64 {
    let mut y = x;
    let mut log_d = CompensatedSum::new();
    let mut acc = CompensatedSum::new();
    for _ in 0..q {
        acc.add(log_d.value().exp());
        let d = map.deriv(y);
        if d <= 0.0 {
            // every later term vanishes
            return acc.value() / q as f64;
        }
        log_d.add(d.ln());
        y = map.eval(y);
    }
    acc.value() / q as f64
}

/// `ŵ(x) = 1 - (1/q) Σ_{i<q} Df^i(x)`.
pub fn w_hat_at<M: CircleMap + ?Sized>(map: &M, q: usize, x: f64) -> f64 {
    1.0 - mean_derivative(map, x, q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WHat {
    pub q: usize,
    pub samples: SampledFunction,
    /// Trapezoid rule for `∫ ŵ dLeb`.
    pub integral: f64,
}

/// Samples of `ŵ` with return time `q` on `grid` equispaced points.
pub fn w_hat<M: CircleMap + ?Sized>(map: &M, q: usize, grid: usize) -> Result<WHat> {
    if q == 0 || grid < 2 {
        return Err(LabError::InvalidArgument(format!(
            "need q >= 1 and grid >= 2, got {q}, {grid}"
        )));
    }
    let xs: Vec<f64> = (0..grid).map(|i| i as f64 / grid as f64).collect();
    let values: Vec<f64> = xs.par_iter().map(|&x| w_hat_at(map, q, x)).collect();
    // periodic trapezoid rule reduces to the grid mean
    let integral = values.iter().copied().collect::<CompensatedSum>().value() / grid as f64;
    Ok(WHat {
        q,
        samples: SampledFunction::from_values(xs, values),
        integral,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoboundaryDefect {
    pub q: usize,
    /// `sup |(ŵ∘f) Df - ŵ - (Df - 1)|` with `ŵ∘f` evaluated from a fresh orbit of `f(x)`.
    pub direct: f64,
    /// `(1/q) sup |1 - Df^q|`.
    pub closed_form: f64,
    /// Pointwise `max |direct(x) - closed(x)|`.
    pub max_disagreement: f64,
    /// `sup Df^q` on the grid.
    pub sup_deriv: f64,
}

pub fn coboundary_defect<M: CircleMap + ?Sized>(map: &M, q: usize, grid: usize) -> Result<CoboundaryDefect> {
    if q == 0 || grid < 2 {
        return Err(LabError::InvalidArgument(format!(
            "need q >= 1 and grid >= 2, got {q}, {grid}"
        )));
    }
    let rows: Vec<(f64, f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / grid as f64;
            let d = map.deriv(x);
            let direct = w_hat_at(map, q, map.eval(x)) * d - w_hat_at(map, q, x) - (d - 1.0);
            let trace = eval_orbit(map, x, q).expect("q >= 1");
            let dq = trace.deriv(q);
            (direct, (1.0 - dq) / q as f64, dq)
        })
        .collect();
    let mut out = CoboundaryDefect {
        q,
        direct: 0.0,
        closed_form: 0.0,
        max_disagreement: 0.0,
        sup_deriv: 0.0,
    };
    for (direct, closed, dq) in rows {
        out.direct = out.direct.max(direct.abs());
        out.closed_form = out.closed_form.max(closed.abs());
        out.max_disagreement = out.max_disagreement.max((direct - closed).abs());
        out.sup_deriv = out.sup_deriv.max(dq);
    }
    Ok(out)
}

/// `∫ φ dμ` together with an error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub uncertainty: f64,
}

impl MeanEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            uncertainty: 0.0,
        }
    }
}

/// Birkhoff average over `q` iterates of `x`. By the classical Denjoy–Koksma
/// inequality it is within `var(φ)/q` of the invariant mean when `q` is a return time.
pub fn birkhoff_mean<M: CircleMap + ?Sized, O: Observable + ?Sized>(
    map: &M,
    phi: &O,
    x: f64,
    q: usize,
    variation: f64,
) -> MeanEstimate {
    let mut y = x;
    let mut acc = CompensatedSum::new();
    for _ in 0..q {
        acc.add(phi.value(y));
        y = map.eval(y);
    }
    MeanEstimate {
        value: acc.value() / q as f64,
        uncertainty: variation / q as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkDeviation {
    pub q: usize,
    /// `sup_x |Σ_{i<q} φ(f^i x) - q ∫ φ dμ̂|`.
    pub deviation: f64,
    /// `q` times the uncertainty of the mean.
    pub uncertainty: f64,
}

/// Sup over `SUP_GRID` points and `extra_points` of the centred Birkhoff sum of length `q`.
pub fn dk_deviation<M: CircleMap + ?Sized, O: Observable + ?Sized>(
    map: &M,
    phi: &O,
    q: usize,
    mean: MeanEstimate,
    extra_points: &[f64],
) -> DkDeviation {
    let target = q as f64 * mean.value;
    let xs: Vec<f64> = (0..SUP_GRID)
        .map(|i| i as f64 / SUP_GRID as f64)
        .chain(extra_points.iter().copied())
        .collect();
    let deviation = xs
        .par_iter()
        .map(|&x| {
            let mut y = x;
            let mut acc = CompensatedSum::new();
            for _ in 0..q {
                acc.add(phi.value(y));
                y = map.eval(y);
            }
            acc.add(-target);
            acc.value().abs()
        })
        .reduce(|| 0.0, f64::max);
    DkDeviation {
        q,
        deviation,
        uncertainty: q as f64 * mean.uncertainty,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkLevel {
    pub level: usize,
    #[serde(flatten)]
    pub deviation: DkDeviation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkSeries {
    pub levels: Vec<DkLevel>,
    pub mean: MeanEstimate,
    pub verdict: Verdict,
}

impl DkSeries {
    pub fn at(&self, level: usize) -> Option<&DkDeviation> {
        self.levels.iter().find(|l| l.level == level).map(|l| &l.deviation)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.levels
            .iter()
            .map(|l| {
                format!(
                    "{},{},{:.17e},{:.17e},{}",
                    l.level,
                    l.deviation.q,
                    l.deviation.deviation,
                    l.deviation.uncertainty,
                    self.verdict.as_str()
                )
            })
            .collect()
    }
}

/// Levels whose maximum serves as the reference for the decay verdict.
pub const DK_REFERENCE_LEVELS: [usize; 3] = [4, 5, 6];

/// Decay verdict for `d_{n_max}` against `½ max(d_4, d_5, d_6)`.
///
/// With error bars: pass when the upper end of `d_{n_max}` is below half the lower
/// end of the reference, fail when the lower end is above half the upper end,
/// inconclusive otherwise or when the uncertainty at `n_max` exceeds the value itself.
pub fn dk_verdict(levels: &[DkLevel]) -> Verdict {
    let Some(last) = levels.last() else {
        return Verdict::Inconclusive;
    };
    let reference: Vec<&DkDeviation> = levels
        .iter()
        .filter(|l| DK_REFERENCE_LEVELS.contains(&l.level))
        .map(|l| &l.deviation)
        .collect();
    if reference.is_empty() {
        return Verdict::Inconclusive;
    }
    let d = &last.deviation;
    if d.uncertainty > d.deviation {
        return Verdict::Inconclusive;
    }
    let ref_low = reference
        .iter()
        .map(|r| (r.deviation - r.uncertainty).max(0.0))
        .fold(0.0, f64::max);
    let ref_high = reference
        .iter()
        .map(|r| r.deviation + r.uncertainty)
        .fold(0.0, f64::max);
    if d.deviation + d.uncertainty <= 0.5 * ref_low {
        Verdict::Pass
    } else if d.deviation - d.uncertainty > 0.5 * ref_high {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// `d_n` for `n = 4..=n_max`, using return times from `cf` and the given mean of `φ`.
/// Partition endpoints of level `n` based at `base` are added to the sup grid.
pub fn dk_improved_series<M: CircleMap + ?Sized, O: Observable + ?Sized>(
    map: &M,
    phi: &O,
    cf: &ContinuedFraction,
    n_max: usize,
    mean: MeanEstimate,
    base: f64,
) -> Result<DkSeries> {
    let first = DK_REFERENCE_LEVELS[0];
    if n_max < DK_REFERENCE_LEVELS[2] {
        return Err(LabError::InvalidArgument(format!("n_max = {n_max} must be at least 6")));
    }
    let mut levels = Vec::new();
    for level in first..=n_max {
        let partition = build_partition(map, base, level, cf)?;
        let endpoints: Vec<f64> = partition.atoms.iter().map(|a| a.start).collect();
        let q = cf.q[level] as usize;
        levels.push(DkLevel {
            level,
            deviation: dk_deviation(map, phi, q, mean, &endpoints),
        });
    }
    let verdict = dk_verdict(&levels);
    Ok(DkSeries { levels, mean, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::CircleMapLift;
    use crate::observable::TrigPolynomial;

    #[test]
    fn rotation_has_trivial_w_hat() {
        let map = CircleMapLift::rotation(0.3);
        let w = w_hat(&map, 13, 64).unwrap();
        assert!(w.samples.values.iter().all(|&v| v == 0.0));
        let d = coboundary_defect(&map, 13, 64).unwrap();
        assert_eq!(d.direct, 0.0);
        assert_eq!(d.closed_form, 0.0);
    }

    #[test]
    fn constant_has_zero_deviation() {
        let map = CircleMapLift::critical_sine(1, 0.6).unwrap();
        let d = dk_deviation(&map, &TrigPolynomial::constant(1.0), 34, MeanEstimate::exact(1.0), &[]);
        assert_eq!(d.deviation, 0.0);
    }

    fn level(level: usize, deviation: f64, uncertainty: f64) -> DkLevel {
        DkLevel {
            level,
            deviation: DkDeviation {
                q: level,
                deviation,
                uncertainty,
            },
        }
    }

    #[test]
    fn verdict_rules() {
        let mut series = vec![level(4, 1.0, 0.0), level(5, 0.8, 0.0), level(6, 0.6, 0.0)];
        series.push(level(11, 0.1, 0.0));
        assert_eq!(dk_verdict(&series), Verdict::Pass);
        series[3] = level(11, 0.9, 0.0);
        assert_eq!(dk_verdict(&series), Verdict::Fail);
        series[3] = level(11, 0.1, 0.2);
        assert_eq!(dk_verdict(&series), Verdict::Inconclusive);
        series[3] = level(11, 0.45, 0.1);
        assert_eq!(dk_verdict(&series), Verdict::Inconclusive);
    }
}

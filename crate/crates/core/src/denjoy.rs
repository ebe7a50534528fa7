//! Piecewise-affine Denjoy blow-ups of an irrational rotation.
//!
//! The orbit points `θ_n = nρ mod 1`, `|n| <= N + 1`, are replaced by intervals
//! `I_n` of length `ℓ_n = c (|n| + 2)^{-α}`, with `c` fixed so that the lengths of
//! all `n ∈ ℤ` would sum to one half. The map sends `I_n` affinely onto
//! `I_{n+1}` for `-N - 1 <= n <= N`, collapses the last interval `I_{N+1}` to the
//! position of `θ_{N+2}`, and acts on the complement by the rotation read
//! through the collapsing semiconjugacy.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::map::CircleMap;
use crate::measure::DiscreteMeasure;
use crate::observable::Observable;
use crate::summation::{compensated_sum, CompensatedSum};

pub const DEFAULT_LENGTH_EXPONENT: f64 = 3.0;
pub const MAX_TRUNCATION: usize = 100_000;

/// `ζ(s, a) = Σ_{k>=0} (a + k)^{-s}` for `s > 1`, `a > 0`.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const DIRECT: usize = 64;
    let mut acc = CompensatedSum::new();
    for k in 0..DIRECT {
        acc.add((a + k as f64).powf(-s));
    }
    let b = a + DIRECT as f64;
    let p = b.powf(-s);
    acc.add(b * p / (s - 1.0));
    acc.add(0.5 * p);
    acc.add(s * p / (12.0 * b));
    acc.add(-s * (s + 1.0) * (s + 2.0) * p / (720.0 * b.powi(3)));
    acc.add(s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * p / (30_240.0 * b.powi(5)));
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenjoyInterval {
    pub n: i64,
    pub left: f64,
    pub right: f64,
}

impl DenjoyInterval {
    pub fn length(&self) -> f64 {
        self.right - self.left
    }
}

/// Cubic (or general power) length law `ℓ_n = c (|n| + 2)^{-α}` with `Σ_ℤ ℓ_n = ½`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthLaw {
    pub exponent: f64,
    pub scale: f64,
}

impl LengthLaw {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent > 2.0) || !exponent.is_finite() {
            return Err(LabError::InvalidArgument(format!(
                "length exponent {exponent} must exceed 2"
            )));
        }
        let total = 2f64.powf(-exponent) + 2.0 * hurwitz_zeta(exponent, 3.0);
        Ok(Self {
            exponent,
            scale: 0.5 / total,
        })
    }

    pub fn length(&self, n: i64) -> f64 {
        self.scale * (n.unsigned_abs() as f64 + 2.0).powf(-self.exponent)
    }

    /// `Σ_{|n| > N} ℓ_n`.
    pub fn tail(&self, truncation: usize) -> f64 {
        2.0 * self.scale * hurwitz_zeta(self.exponent, truncation as f64 + 3.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenjoyMap {
    pub rho: f64,
    pub truncation: usize,
    pub law: Option<LengthLaw>,
    /// Intervals indexed by `n - first_index`.
    table: Vec<DenjoyInterval>,
    first_index: i64,
    /// Table positions sorted by left endpoint.
    order: Vec<usize>,
    /// `Σ` of lengths of the sorted intervals strictly before each position.
    prefix: Vec<f64>,
    /// Length of the complement of the table.
    complement: f64,
}

/// `θ_n = nρ mod 1`.
fn orbit_angle(rho: f64, n: i64) -> f64 {
    (n as f64 * rho).rem_euclid(1.0)
}

impl DenjoyMap {
    /// Blow-up of the rotation by `rho` with `|n| <= truncation + 1` in the table.
    pub fn new(rho: f64, truncation: usize, exponent: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) || rho == 0.0 {
            return Err(LabError::InvalidArgument(format!(
                "rotation number {rho} not in (0, 1)"
            )));
        }
        if truncation == 0 || truncation > MAX_TRUNCATION {
            return Err(LabError::InvalidArgument(format!(
                "truncation {truncation} not in 1..={MAX_TRUNCATION}"
            )));
        }
        let law = LengthLaw::new(exponent)?;
        let extent = truncation as i64 + 1;
        let indices: Vec<i64> = (-extent..=extent).collect();
        let lengths: Vec<f64> = indices.iter().map(|&n| law.length(n)).collect();
        let complement = 1.0 - compensated_sum(lengths.iter().copied());

        let mut by_angle: Vec<usize> = (0..indices.len()).collect();
        by_angle.sort_by(|&a, &b| orbit_angle(rho, indices[a]).total_cmp(&orbit_angle(rho, indices[b])));
        let mut table = vec![
            DenjoyInterval {
                n: 0,
                left: 0.0,
                right: 0.0
            };
            indices.len()
        ];
        let mut before = CompensatedSum::new();
        for &k in &by_angle {
            let theta = orbit_angle(rho, indices[k]);
            let left = complement * theta + before.value();
            table[k] = DenjoyInterval {
                n: indices[k],
                left,
                right: left + lengths[k],
            };
            before.add(lengths[k]);
        }
        let map = Self::assemble(rho, truncation, Some(law), table, -extent, complement)?;
        for w in map.order.windows(2) {
            let (a, b) = (&map.table[w[0]], &map.table[w[1]]);
            if !(a.right < b.left) || !(a.length() > 0.0) {
                return Err(LabError::IntervalCollision(a.n));
            }
        }
        Ok(map)
    }

    /// A map driven by an explicit table with consecutive indices. Used for audits
    /// of corrupted or degenerate tables.
    pub fn from_table(rho: f64, table: Vec<DenjoyInterval>) -> Result<Self> {
        let Some(first) = table.first() else {
            return Err(LabError::InvalidArgument("empty interval table".into()));
        };
        let first_index = first.n;
        if table.iter().enumerate().any(|(k, e)| e.n != first_index + k as i64) {
            return Err(LabError::InvalidArgument("table indices must be consecutive".into()));
        }
        if !(first_index <= 0 && table.last().map(|e| e.n).unwrap_or(0) >= 0) {
            return Err(LabError::InvalidArgument("table must contain index 0".into()));
        }
        let truncation = (-first_index).min(table.last().unwrap().n).max(1) as usize - 1;
        let complement = 1.0 - compensated_sum(table.iter().map(|e| e.length().max(0.0)));
        Self::assemble(rho, truncation, None, table, first_index, complement)
    }

    fn assemble(
        rho: f64,
        truncation: usize,
        law: Option<LengthLaw>,
        table: Vec<DenjoyInterval>,
        first_index: i64,
        complement: f64,
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.sort_by(|&a, &b| table[a].left.total_cmp(&table[b].left));
        let mut prefix = Vec::with_capacity(order.len() + 1);
        let mut acc = CompensatedSum::new();
        prefix.push(0.0);
        for &k in &order {
            acc.add(table[k].length().max(0.0));
            prefix.push(acc.value());
        }
        Ok(Self {
            rho,
            truncation,
            law,
            table,
            first_index,
            order,
            prefix,
            complement,
        })
    }

    pub fn interval(&self, n: i64) -> Option<&DenjoyInterval> {
        let k = n - self.first_index;
        if k < 0 {
            return None;
        }
        self.table.get(k as usize)
    }

    pub fn intervals(&self) -> &[DenjoyInterval] {
        &self.table
    }

    /// Index range `first..=last` of the table.
    pub fn index_range(&self) -> (i64, i64) {
        (self.first_index, self.first_index + self.table.len() as i64 - 1)
    }

    /// `Σ_{|n| <= N} ℓ_n`.
    pub fn blown_length(&self, truncation: usize) -> f64 {
        let t = truncation as i64;
        compensated_sum(self.table.iter().filter(|e| e.n.abs() <= t).map(|e| e.length()))
    }

    pub fn complement_length(&self) -> f64 {
        self.complement
    }

    /// Table index of the interval containing `y`, if any.
    fn locate(&self, y: f64) -> std::result::Result<usize, usize> {
        // number of intervals whose left endpoint is <= y
        let count = self.order.partition_point(|&k| self.table[k].left <= y);
        if count > 0 {
            let k = self.order[count - 1];
            if y < self.table[k].right {
                return Ok(k);
            }
        }
        Err(count)
    }

    /// Position of the rotation angle `θ` on the blown-up circle.
    fn position(&self, theta: f64) -> f64 {
        let count = self
            .order
            .partition_point(|&k| orbit_angle(self.rho, self.table[k].n) < theta);
        self.complement * theta + self.prefix[count]
    }

    /// Affine action `I_n → I_{n+1}` on a point of `I_n`.
    fn affine_forward(&self, k: usize, y: f64) -> Option<f64> {
        let from = &self.table[k];
        let to = self.table.get(k + 1)?;
        Some(to.left + (y - from.left) * (to.length() / from.length()))
    }

    fn affine_backward(&self, k: usize, y: f64) -> Option<f64> {
        let from = &self.table[k];
        let to = self.table.get(k.checked_sub(1)?)?;
        Some(to.left + (y - from.left) * (to.length() / from.length()))
    }

    /// `f(y)` reduced to `[0, 1)`.
    pub fn apply(&self, y: f64) -> f64 {
        let y = y.rem_euclid(1.0);
        match self.locate(y) {
            Ok(k) => match self.affine_forward(k, y) {
                Some(z) => z,
                None => {
                    let n = self.table[k].n + 1;
                    self.position(orbit_angle(self.rho, n))
                }
            },
            Err(count) => {
                let theta = (y - self.prefix[count]) / self.complement;
                self.position((theta + self.rho).rem_euclid(1.0)).rem_euclid(1.0)
            }
        }
    }

    /// Ratio `ℓ_{n+1}/ℓ_n` for `n = -N-1..=N`, zero on the collapsed interval, one elsewhere.
    pub fn derivative(&self, y: f64) -> f64 {
        match self.locate(y.rem_euclid(1.0)) {
            Ok(k) => match self.table.get(k + 1) {
                Some(next) => next.length() / self.table[k].length(),
                None => 0.0,
            },
            Err(_) => 1.0,
        }
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.table
            .iter()
            .map(|e| format!("{},{:.17e},{:.17e},{:.17e}", e.n, e.left, e.right, e.length()))
            .collect()
    }

    /// `f^n(x)` for `x` in `I_0` and `|n|` within the table.
    pub fn orbit_in_table(&self, x: f64, n: i64) -> Option<f64> {
        let i0 = self.interval(0)?;
        let target = self.interval(n)?;
        Some(target.left + (x - i0.left) * (target.length() / i0.length()))
    }
}

impl CircleMap for DenjoyMap {
    fn lift(&self, x: f64) -> f64 {
        let base = x.floor();
        let y = x - base;
        let z = self.apply(y);
        base + y + (z - y).rem_euclid(1.0)
    }

    fn deriv(&self, x: f64) -> f64 {
        self.derivative(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WanderingViolation {
    /// `f^first(I_0)` and `f^second(I_0)` intersect.
    Overlap { first: i64, second: i64 },
    /// `f^index(I_0)` has non-positive length.
    Degenerate { index: i64 },
    /// The table does not reach `f^index(I_0)`.
    OutOfTable { index: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WanderingCertificate {
    pub wandering: bool,
    pub depth: usize,
    pub images_checked: usize,
    pub violation: Option<WanderingViolation>,
}

fn arcs_intersect(a: (f64, f64), b: (f64, f64)) -> bool {
    let (la, lb) = (a.1 - a.0, b.1 - b.0);
    (b.0 - a.0).rem_euclid(1.0) <= la || (a.0 - b.0).rem_euclid(1.0) <= lb
}

/// Checks that `f^n(I_0)`, `|n| <= depth`, are pairwise disjoint, pushing the
/// endpoints of `I_0` through the affine pieces of the table.
pub fn wandering_certificate(map: &DenjoyMap, depth: usize) -> WanderingCertificate {
    let fail = |violation, checked| WanderingCertificate {
        wandering: false,
        depth,
        images_checked: checked,
        violation: Some(violation),
    };
    let Some(i0) = map.interval(0) else {
        return fail(WanderingViolation::OutOfTable { index: 0 }, 0);
    };
    let k0 = (0 - map.first_index) as usize;
    let mut images: Vec<(i64, (f64, f64))> = Vec::with_capacity(2 * depth + 1);
    if !(i0.length() > 0.0) {
        return fail(WanderingViolation::Degenerate { index: 0 }, 0);
    }
    images.push((0, (i0.left, i0.right)));

    for direction in [1i64, -1] {
        let (mut a, mut b) = (i0.left, i0.right);
        let mut k = k0;
        for step in 1..=depth as i64 {
            let index = direction * step;
            if map.table[k].length() <= 0.0 {
                return fail(
                    WanderingViolation::Degenerate {
                        index: index - direction,
                    },
                    images.len(),
                );
            }
            let moved = if direction > 0 {
                map.affine_forward(k, a).zip(map.affine_forward(k, b))
            } else {
                map.affine_backward(k, a).zip(map.affine_backward(k, b))
            };
            let Some((na, nb)) = moved else {
                return fail(WanderingViolation::OutOfTable { index }, images.len());
            };
            k = if direction > 0 { k + 1 } else { k - 1 };
            a = na;
            b = nb;
            if !(b > a) {
                return fail(WanderingViolation::Degenerate { index }, images.len());
            }
            let (a0, b0) = (a.rem_euclid(1.0), a.rem_euclid(1.0) + (b - a));
            if let Some(&(other, _)) = images.iter().find(|(_, arc)| arcs_intersect(*arc, (a0, b0))) {
                return fail(
                    WanderingViolation::Overlap {
                        first: other,
                        second: index,
                    },
                    images.len(),
                );
            }
            images.push((index, (a0, b0)));
        }
    }
    WanderingCertificate {
        wandering: true,
        depth,
        images_checked: images.len(),
        violation: None,
    }
}

/// The atomic measure `(1/S) Σ_{|n| <= N} Df^n(x) δ_{f^n(x)}` for `x ∈ I_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenjoyMeasure {
    pub measure: DiscreteMeasure,
    pub base: f64,
    pub truncation: usize,
    /// `S = Σ_{|n| <= N} ℓ_n / ℓ_0`.
    pub normalizer: f64,
    /// `Σ_{|n| > N} ℓ_n / ℓ_0` (zero for tables without a length law).
    pub tail: f64,
    /// `Df^n(x) = ℓ_n / ℓ_0` for `n = -N..=N`.
    pub derivatives: Vec<f64>,
}

pub fn denjoy_atomic_measure(map: &DenjoyMap, x: f64, truncation: usize) -> Result<DenjoyMeasure> {
    let i0 = *map.interval(0).ok_or(LabError::NotInBaseInterval(x))?;
    if !(x > i0.left && x < i0.right) {
        return Err(LabError::NotInBaseInterval(x));
    }
    let (lo, hi) = map.index_range();
    let t = truncation as i64;
    if -t < lo || t > hi {
        return Err(LabError::InvalidArgument(format!(
            "truncation {truncation} exceeds the table range {lo}..={hi}"
        )));
    }
    let l0 = i0.length();
    let mut points = Vec::with_capacity(2 * truncation + 1);
    let mut derivatives = Vec::with_capacity(2 * truncation + 1);
    for n in -t..=t {
        let e = map.interval(n).expect("checked range");
        points.push(map.orbit_in_table(x, n).expect("checked range"));
        derivatives.push(e.length() / l0);
    }
    let normalizer = compensated_sum(derivatives.iter().copied());
    let weights = derivatives.iter().map(|d| d / normalizer).collect();
    let tail = map.law.map(|law| law.tail(truncation) / l0).unwrap_or(0.0);
    Ok(DenjoyMeasure {
        measure: DiscreteMeasure::Atomic { points, weights },
        base: x,
        truncation,
        normalizer,
        tail,
        derivatives,
    })
}

/// `⟨T, u⟩ = ∫ u' dν`.
pub fn distribution_pairing<O: Observable + ?Sized>(nu: &DiscreteMeasure, u: &O) -> f64 {
    match nu {
        DiscreteMeasure::Atomic { points, weights } => {
            compensated_sum(points.iter().zip(weights).map(|(&x, &w)| w * u.deriv(x)))
        }
        DiscreteMeasure::Grid { values } => {
            let b = values.len() as f64;
            compensated_sum(
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * u.deriv((i as f64 + 0.5) / b)),
            ) / b
        }
    }
}

/// `u∘f - u` as an observable, with derivative `u'(f) Df - u'`.
pub struct PulledBack<'a, O: ?Sized> {
    pub map: &'a DenjoyMap,
    pub u: &'a O,
}

impl<O: Observable + ?Sized> Observable for PulledBack<'_, O> {
    fn value(&self, x: f64) -> f64 {
        self.u.value(self.map.apply(x)) - self.u.value(x)
    }

    fn deriv(&self, x: f64) -> f64 {
        self.u.deriv(self.map.apply(x)) * self.map.derivative(x) - self.u.deriv(x)
    }
}

/// Birkhoff average of `u` along `len` iterates of a point of the complement
/// of the table (the support of the invariant measure).
pub fn complement_average<O: Observable + ?Sized>(map: &DenjoyMap, u: &O, y: f64, len: usize) -> Result<f64> {
    if map.locate(y.rem_euclid(1.0)).is_ok() {
        return Err(LabError::InvalidArgument(format!("{y} lies in a blown-up interval")));
    }
    let mut z = y;
    let mut acc = CompensatedSum::new();
    for _ in 0..len {
        acc.add(u.value(z));
        z = map.apply(z);
    }
    Ok(acc.value() / len as f64)
}

/// A point of the complement: the position of a rotation angle that is not in the table.
pub fn complement_point(map: &DenjoyMap, theta: f64) -> f64 {
    map.position(theta.rem_euclid(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GOLDEN_MEAN;

    #[test]
    fn zeta_matches_direct_sum() {
        // smallest terms first, closed-form integral tail
        let m = 2_000_000;
        let mut direct: f64 = (0..m).rev().map(|k| (3.0 + k as f64).powi(-3)).sum();
        let b = 3.0 + m as f64;
        direct += 0.5 / (b * b) + 0.5 / (b * b * b);
        assert!(
            (hurwitz_zeta(3.0, 3.0) - direct).abs() < 1e-15,
            "{}",
            hurwitz_zeta(3.0, 3.0) - direct
        );
        // ζ(2, 1) = π²/6
        assert!((hurwitz_zeta(2.0, 1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn affine_action_and_derivative() {
        let map = DenjoyMap::new(GOLDEN_MEAN, 50, 3.0).unwrap();
        let i0 = *map.interval(0).unwrap();
        let i1 = *map.interval(1).unwrap();
        let x = i0.left + 0.25 * i0.length();
        assert!((map.apply(x) - (i1.left + 0.25 * i1.length())).abs() < 1e-15);
        assert!((map.derivative(x) - (2.0f64 / 3.0).powi(3)).abs() < 1e-12);
        let last = *map.interval(51).unwrap();
        assert_eq!(map.derivative(last.left + 0.5 * last.length()), 0.0);
    }

    #[test]
    fn complement_is_rotated() {
        let map = DenjoyMap::new(GOLDEN_MEAN, 20, 3.0).unwrap();
        let theta = 0.123_456;
        let y = complement_point(&map, theta);
        let z = map.apply(y);
        let expected = complement_point(&map, theta + GOLDEN_MEAN);
        assert!((z - expected).abs() < 1e-14);
        assert_eq!(map.derivative(y), 1.0);
    }

    #[test]
    fn corrupted_and_degenerate_tables() {
        let map = DenjoyMap::new(GOLDEN_MEAN, 10, 3.0).unwrap();
        let mut table = map.intervals().to_vec();
        let k0 = table.iter().position(|e| e.n == 0).unwrap();
        let k3 = table.iter().position(|e| e.n == 3).unwrap();
        table[k3].left = table[k0].left;
        table[k3].right = table[k0].right;
        let corrupted = DenjoyMap::from_table(GOLDEN_MEAN, table).unwrap();
        let cert = wandering_certificate(&corrupted, 5);
        assert!(!cert.wandering);
        assert_eq!(
            cert.violation,
            Some(WanderingViolation::Overlap { first: 0, second: 3 })
        );

        let rotation: Vec<DenjoyInterval> = (-5..=5)
            .map(|n| {
                let t = orbit_angle(GOLDEN_MEAN, n);
                DenjoyInterval { n, left: t, right: t }
            })
            .collect();
        let degenerate = DenjoyMap::from_table(GOLDEN_MEAN, rotation).unwrap();
        let cert = wandering_certificate(&degenerate, 3);
        assert_eq!(cert.violation, Some(WanderingViolation::Degenerate { index: 0 }));
    }

    #[test]
    fn shallow_table_runs_out() {
        let map = DenjoyMap::new(GOLDEN_MEAN, 3, 3.0).unwrap();
        let cert = wandering_certificate(&map, 4);
        assert!(cert.wandering);
        let cert = wandering_certificate(&map, 5);
        assert_eq!(cert.violation, Some(WanderingViolation::OutOfTable { index: 5 }));
    }
}

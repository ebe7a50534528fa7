//! Dynamical partitions `P_n(x)`: the `q_n` iterates of `I_{n+1}(x)` together
//! with the `q_{n+1}` iterates of `I_n(x)`, plus the adjacency and
//! intersection-multiplicity diagnostics run on them.

use std::fmt;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::map::{orbit_points, CircleMap, CircleMapLift};
use crate::rotation::ContinuedFraction;

/// Orbit points closer than this make a level unusable.
pub const MIN_ATOM_LENGTH: f64 = 1e-13;

/// Defect threshold for the covering and overlap checks.
pub const PARTITION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomLabel {
    /// `f^i(I_n(x))`, `0 <= i < q_{n+1}`.
    Long(usize),
    /// `f^j(I_{n+1}(x))`, `0 <= j < q_n`.
    Short(usize),
}

impl AtomLabel {
    pub fn is_long(&self) -> bool {
        matches!(self, AtomLabel::Long(_))
    }
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomLabel::Long(i) => write!(f, "long:{i}"),
            AtomLabel::Short(j) => write!(f, "short:{j}"),
        }
    }
}

/// A closed arc starting at `start` and running counter-clockwise for `length`.
///
/// When the arc's endpoints are orbit points, their orbit indices are kept so
/// that images under `f^k` can be read off the orbit without re-iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleInterval {
    pub start: f64,
    pub length: f64,
    pub endpoints: Option<(usize, usize)>,
}

impl CircleInterval {
    pub fn new(start: f64, length: f64) -> Self {
        Self {
            start: start.rem_euclid(1.0),
            length,
            endpoints: None,
        }
    }

    /// End point as a lift value (may exceed 1).
    pub fn end(&self) -> f64 {
        self.start + self.length
    }

    pub fn contains(&self, y: f64) -> bool {
        (y - self.start).rem_euclid(1.0) <= self.length
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalPartition {
    pub level: usize,
    pub base: f64,
    pub q_n: usize,
    pub q_next: usize,
    /// Atoms sorted by left endpoint.
    pub atoms: Vec<CircleInterval>,
    /// `labels[k]` is the combinatorial label of `atoms[k]`.
    pub labels: Vec<AtomLabel>,
    /// `I_n(x)` contains `f^{q_{n+2}}(x)`.
    pub orientation_consistent: bool,
    orbit: Vec<f64>,
    wraps: Vec<i64>,
}

impl DynamicalPartition {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn expected_len(&self) -> usize {
        self.q_n + self.q_next
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.length).collect()
    }

    /// The orbit `f^i(x)` used to build the partition (long enough for all
    /// images `f^k(Delta)`, `k < q_{n+1}`, of atom neighbourhoods).
    pub fn orbit(&self) -> &[f64] {
        &self.orbit
    }

    fn lift_gap(&self, i: usize, j: usize) -> f64 {
        (self.orbit[j] - self.orbit[i]) + (self.wraps[j] - self.wraps[i]) as f64
    }

    /// Union of atom `k` with `radius` neighbours on each side: `radius = 1`
    /// gives `Delta*`, `radius = 3` the seven-atom neighbourhood `Delta**`.
    /// `None` when the neighbourhood would wrap around the whole circle.
    pub fn neighbourhood(&self, k: usize, radius: usize) -> Option<CircleInterval> {
        let m = self.atoms.len();
        if 2 * radius + 1 >= m {
            return None;
        }
        let first = (k + m - radius) % m;
        let last = (k + radius) % m;
        let a = self.atoms[first];
        let b = self.atoms[last];
        let (si, _) = a.endpoints?;
        let (_, ei) = b.endpoints?;
        let length = (b.end() - a.start).rem_euclid(1.0);
        Some(CircleInterval {
            start: a.start,
            length,
            endpoints: Some((si, ei)),
        })
    }

    /// `f^j(J)` for `j = 0..count`, where `J` has orbit-point endpoints.
    pub fn images(&self, interval: &CircleInterval, count: usize) -> Option<Vec<CircleInterval>> {
        let (si, ei) = interval.endpoints?;
        if si.max(ei) + count > self.orbit.len() {
            return None;
        }
        let winding = (self.lift_gap(si, ei) - interval.length).round() as i64;
        Some(
            (0..count)
                .map(|j| CircleInterval {
                    start: self.orbit[si + j],
                    length: (self.orbit[ei + j] - self.orbit[si + j])
                        + (self.wraps[ei + j] - self.wraps[si + j] - winding) as f64,
                    endpoints: Some((si + j, ei + j)),
                })
                .collect(),
        )
    }

    /// Largest intersection multiplicity of `{f^j(N(Delta))}_{j < q_{n+1}}`
    /// over all atoms `Delta`, with `N` the radius-`radius` neighbourhood.
    /// `None` when the neighbourhood wraps.
    pub fn image_family_multiplicity(&self, radius: usize) -> Option<usize> {
        (0..self.atoms.len())
            .into_par_iter()
            .map(|k| {
                let hood = self.neighbourhood(k, radius)?;
                let family = self.images(&hood, self.q_next)?;
                Some(multiplicity(&family))
            })
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().max().unwrap_or(0))
    }

    /// Largest ratio `|I| / |J|` over adjacent atoms.
    pub fn max_adjacent_ratio(&self) -> f64 {
        let m = self.atoms.len();
        (0..m)
            .map(|k| {
                let a = self.atoms[k].length;
                let b = self.atoms[(k + 1) % m].length;
                (a / b).max(b / a)
            })
            .fold(0.0, f64::max)
    }

    /// CSV rows `level,label,left,right,length`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.atoms
            .iter()
            .zip(&self.labels)
            .map(|(a, l)| {
                format!(
                    "{},{},{:.17e},{:.17e},{:.17e}",
                    self.level,
                    l,
                    a.start,
                    a.end().rem_euclid(1.0),
                    a.length
                )
            })
            .collect()
    }
}

/// Build `P_n(x)` for the map, using the return times of `cf`.
pub fn build_partition<M: CircleMap + ?Sized>(
    map: &M,
    x: f64,
    level: usize,
    cf: &ContinuedFraction,
) -> Result<DynamicalPartition> {
    if level + 2 > cf.depth() {
        return Err(LabError::LevelBeyondExpansion {
            level,
            depth: cf.depth(),
        });
    }
    if !(0.0..1.0).contains(&x) {
        return Err(LabError::InvalidArgument(format!("x = {x} is not in [0, 1)")));
    }
    let (q_n, q_next, q_after) = (cf.q[level] as usize, cf.q[level + 1] as usize, cf.q[level + 2] as usize);
    let (p_n, p_next) = (cf.p[level] as i64, cf.p[level + 1] as i64);
    let horizon = (q_n + 2 * q_next).max(q_after) + 1;
    let (orbit, wraps) = orbit_points(map, x, horizon);
    // integer parts are combined first so the result keeps full precision
    let gap = |i: usize, j: usize, p: i64| (orbit[j] - orbit[i]) + (wraps[j] - wraps[i] - p) as f64;

    let mut atoms = Vec::with_capacity(q_n + q_next);
    let mut labels = Vec::with_capacity(q_n + q_next);
    let mut push = |i: usize, span: usize, p: i64, label: AtomLabel| -> Result<()> {
        let signed = gap(i, i + span, p);
        if signed.abs() >= 0.5 {
            return Err(LabError::CombinatoricsMismatch { level });
        }
        let atom = if signed > 0.0 {
            CircleInterval {
                start: orbit[i],
                length: signed,
                endpoints: Some((i, i + span)),
            }
        } else {
            CircleInterval {
                start: orbit[i + span],
                length: -signed,
                endpoints: Some((i + span, i)),
            }
        };
        atoms.push(atom);
        labels.push(label);
        Ok(())
    };
    for i in 0..q_next {
        push(i, q_n, p_n, AtomLabel::Long(i))?;
    }
    for j in 0..q_n {
        push(j, q_next, p_next, AtomLabel::Short(j))?;
    }

    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[a].start.total_cmp(&atoms[b].start));
    let atoms: Vec<CircleInterval> = order.iter().map(|&k| atoms[k]).collect();
    let labels: Vec<AtomLabel> = order.iter().map(|&k| labels[k]).collect();

    // consecutive atoms must share an orbit point; otherwise the combinatorics are wrong
    let m = atoms.len();
    for k in 0..m {
        let (_, end) = atoms[k].endpoints.expect("orbit atom");
        let (next_start, _) = atoms[(k + 1) % m].endpoints.expect("orbit atom");
        if end != next_start {
            return Err(LabError::CombinatoricsMismatch { level });
        }
        if atoms[k].length < MIN_ATOM_LENGTH {
            let (i, j) = atoms[k].endpoints.expect("orbit atom");
            return Err(LabError::BeyondPrecision {
                level,
                i,
                j,
                gap: atoms[k].length,
            });
        }
    }

    let i_n = labels
        .iter()
        .position(|l| *l == AtomLabel::Long(0))
        .map(|k| atoms[k])
        .expect("I_n is always an atom");
    let orientation_consistent = i_n.contains(orbit[q_after]);

    Ok(DynamicalPartition {
        level,
        base: x,
        q_n,
        q_next,
        atoms,
        labels,
        orientation_consistent,
        orbit,
        wraps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    /// Total length of circle not covered by any atom.
    pub covering_defect: f64,
    /// Total length covered twice.
    pub overlap_defect: f64,
    /// Largest endpoint mismatch between neighbours.
    pub endpoint_mismatch: f64,
    /// `|1 - sum of lengths|`.
    pub length_defect: f64,
    pub count: usize,
    pub expected_count: usize,
    pub pass: bool,
}

/// Geometric audit of a partition: covering, overlap and atom count.
pub fn verify_partition(partition: &DynamicalPartition) -> PartitionReport {
    let atoms = &partition.atoms;
    let m = atoms.len();
    let (mut covering, mut overlap, mut mismatch) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..m {
        let right = atoms[k].end();
        let next_left = if k + 1 < m {
            atoms[k + 1].start
        } else {
            atoms[0].start + 1.0
        };
        let diff = next_left - right;
        if diff > 0.0 {
            covering += diff;
        } else {
            overlap -= diff;
        }
        mismatch = mismatch.max(diff.abs());
    }
    let length_defect = (1.0 - crate::summation::compensated_sum(atoms.iter().map(|a| a.length))).abs();
    let expected = partition.expected_len();
    PartitionReport {
        covering_defect: covering,
        overlap_defect: overlap,
        endpoint_mismatch: mismatch,
        length_defect,
        count: m,
        expected_count: expected,
        pass: covering <= PARTITION_TOLERANCE && overlap <= PARTITION_TOLERANCE && m == expected,
    }
}

/// Maximal number of intervals covering a common interior point.
///
/// Exact sweep over endpoints; intervals that only touch at endpoints (up to
/// `1e-12`) do not count as overlapping.
pub fn multiplicity(intervals: &[CircleInterval]) -> usize {
    const SHRINK: f64 = 1e-12;
    let mut base = 0usize;
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(4 * intervals.len());
    for iv in intervals {
        if iv.length >= 1.0 {
            base += 1;
            continue;
        }
        let start = iv.start + SHRINK;
        let length = iv.length - 2.0 * SHRINK;
        if length <= 0.0 {
            continue;
        }
        let start = start.rem_euclid(1.0);
        let end = start + length;
        if end <= 1.0 {
            events.push((start, 1));
            events.push((end, -1));
        } else {
            events.push((start, 1));
            events.push((1.0, -1));
            events.push((0.0, 1));
            events.push((end - 1.0, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut current = 0i64;
    let mut best = 0i64;
    for (_, delta) in events {
        current += delta as i64;
        best = best.max(current);
    }
    base + best as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRatio {
    pub level: usize,
    pub q_n: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealBoundsScan {
    pub levels: Vec<LevelRatio>,
    /// Largest level maximum.
    pub c_hat: f64,
    /// The same scan for the rigid rotation with the same rotation number.
    pub rotation_contrast: Vec<LevelRatio>,
}

fn scan_levels<M: CircleMap + ?Sized>(
    map: &M,
    x: f64,
    cf: &ContinuedFraction,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<Vec<LevelRatio>> {
    levels
        .map(|level| {
            let p = build_partition(map, x, level, cf)?;
            Ok(LevelRatio {
                level,
                q_n: p.q_n,
                max_ratio: p.max_adjacent_ratio(),
            })
        })
        .collect()
}

/// Per-level maxima of adjacent atom ratios for `P_n(x)`, `1 <= n <= n_max`.
pub fn real_bounds_scan<M: CircleMap + ?Sized>(
    map: &M,
    x: f64,
    cf: &ContinuedFraction,
    n_max: usize,
) -> Result<RealBoundsScan> {
    let levels = scan_levels(map, x, cf, 1..=n_max)?;
    let c_hat = levels.iter().map(|l| l.max_ratio).fold(0.0, f64::max);
    let rotation = CircleMapLift::rotation(cf.value());
    let rotation_contrast = scan_levels(&rotation, 0.0, cf, 1..=n_max)?;
    Ok(RealBoundsScan {
        levels,
        c_hat,
        rotation_contrast,
    })
}

/// Least-squares slope of `ln(values)` against position; a per-level growth rate.
pub fn log_growth_rate(values: &[f64]) -> f64 {
    let xs: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    crate::map::least_squares_slope(&xs, &ys)
}

/// Growth of at most 10% per level over the window counts as "no growth trend".
pub const NO_GROWTH_RATE: f64 = 0.1;

pub fn has_growth_trend(values: &[f64]) -> bool {
    values.len() >= 2 && log_growth_rate(values) > NO_GROWTH_RATE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::continued_fraction;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn golden_rotation_level_three() {
        let cf = continued_fraction(golden(), 40).unwrap();
        let map = CircleMapLift::rotation(golden());
        let p = build_partition(&map, 0.0, 3, &cf).unwrap();
        assert_eq!(p.len(), 8);
        assert!(p.orientation_consistent);
        let longs = p.labels.iter().filter(|l| l.is_long()).count();
        assert_eq!(longs, 5);
        let report = verify_partition(&p);
        assert!(report.pass);
        assert!(report.covering_defect <= 1e-12 && report.overlap_defect <= 1e-12);
    }

    #[test]
    fn rational_rotation_level_beyond_depth() {
        let cf = continued_fraction(0.375, 10).unwrap();
        let map = CircleMapLift::rotation(0.375);
        let err = build_partition(&map, 0.0, 2, &cf).unwrap_err();
        assert_eq!(err, LabError::LevelBeyondExpansion { level: 2, depth: 3 });
    }

    #[test]
    fn deleted_atom_shows_as_covering_defect() {
        let cf = continued_fraction(golden(), 40).unwrap();
        let map = CircleMapLift::rotation(golden());
        let mut p = build_partition(&map, 0.0, 5, &cf).unwrap();
        let removed = p.atoms.remove(4);
        p.labels.remove(4);
        let report = verify_partition(&p);
        assert!(!report.pass);
        assert!((report.covering_defect - removed.length).abs() < 1e-15);
        assert_eq!(report.count + 1, report.expected_count);
    }

    #[test]
    fn repeated_interval_multiplicity() {
        let iv = CircleInterval::new(0.9, 0.3);
        assert_eq!(multiplicity(&[iv; 5]), 5);
        // touching arcs do not overlap
        let a = CircleInterval::new(0.1, 0.2);
        let b = CircleInterval::new(0.3, 0.2);
        assert_eq!(multiplicity(&[a, b]), 1);
        assert_eq!(multiplicity(&[]), 0);
    }

    #[test]
    fn large_partial_quotient_breaks_real_bounds_for_rotations() {
        let mut quotients = vec![1u64; 20];
        quotients[3] = 50;
        let cf = ContinuedFraction::from_partial_quotients(quotients).unwrap();
        let rotation = CircleMapLift::rotation(cf.value());
        // |I_2| = a_3 |I_3| + |I_4|
        let p = build_partition(&rotation, 0.0, 2, &cf).unwrap();
        let r = p.max_adjacent_ratio();
        assert!((r - 50.0).abs() < 2.0, "ratio {r}");
    }

    #[test]
    fn growth_trend_detection() {
        assert!(!has_growth_trend(&[2.0, 2.1, 1.9, 2.0, 2.05]));
        assert!(has_growth_trend(&[2.0, 4.0, 8.0, 16.0, 32.0]));
    }

    #[test]
    fn small_partitions_have_no_seven_atom_neighbourhood() {
        let cf = continued_fraction(golden(), 40).unwrap();
        let map = CircleMapLift::rotation(golden());
        let p = build_partition(&map, 0.0, 2, &cf).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.neighbourhood(0, 3).is_none());
        assert_eq!(p.image_family_multiplicity(3), None);
    }
}

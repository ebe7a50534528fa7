use circle_lab_core::cohomology::{birkhoff_mean, coboundary_defect, dk_improved_series, w_hat, MeanEstimate, Verdict};
use circle_lab_core::denjoy::{
    complement_average, complement_point, denjoy_atomic_measure, distribution_pairing, wandering_certificate,
    DenjoyMap, DEFAULT_LENGTH_EXPONENT, MAX_TRUNCATION,
};
use circle_lab_core::export::{columns, measure_rows};
use circle_lab_core::map::{backward_orbit, eval_orbit, CircleMap, CircleMapLift, ParametricFamily};
use circle_lab_core::measure::{
    automorphic_defect, density_l1, empirical_c1, l1_distance, omega_ratio_scan, orbit_sum_measure, sigma_partial,
    solve_automorphic, DiscreteMeasure, COMPARE_BINS,
};
use circle_lab_core::observable::{Bump, SampledFunction, TestFunctionSet, TrigPolynomial};
use circle_lab_core::partition::{
    build_partition, has_growth_trend, log_growth_rate, real_bounds_scan, verify_partition, NO_GROWTH_RATE,
};
use circle_lab_core::rotation::{continued_fraction, rotation_number, tune_omega, ContinuedFraction, RotationKind};
use circle_lab_core::{LabError, GOLDEN_MEAN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Experiment, MapSpec, RunConfig};
use crate::report::{Check, CsvSeries, Outcome};
use crate::CliError;

/// L¹ distance to the uniform density at which the `s = 1` solution counts as Lebesgue.
pub const UNIFORM_L1: f64 = 0.01;
/// L¹ distance (over `COMPARE_BINS` bins) between the two constructions.
pub const AGREEMENT_L1: f64 = 0.05;
/// Relative increase below which a partial-sum series counts as constant.
pub const PLATEAU_TOL: f64 = 1e-9;
pub const PARTITION_TOL: f64 = 1e-10;
pub const STAR_MULTIPLICITY: usize = 3;
pub const DOUBLE_STAR_MULTIPLICITY: usize = 8;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const W_HAT_MEAN_TOL: f64 = 1e-4;
/// Largest return time used for orbit-sum reference measures.
pub const DEEP_RETURN: u64 = 1_000_000;
/// Return time used when comparing orbit sums against the transfer operator.
pub const AGREEMENT_RETURN: u64 = 10_000;
pub const CRITICAL_PREIMAGE_DEPTH: usize = 20;

pub struct Setup {
    pub map: CircleMapLift,
    pub cf: ContinuedFraction,
    pub rho: f64,
    pub base: f64,
    pub tuned_omega: Option<f64>,
}

fn lab(e: LabError) -> CliError {
    CliError::Lab(e)
}

pub fn setup(spec: &MapSpec) -> Result<Setup, CliError> {
    let (map, rho, tuned_omega) = match *spec {
        MapSpec::Rotation { rho } => (CircleMapLift::rotation(rho), rho.rem_euclid(1.0), None),
        MapSpec::KCriticalSine { k, omega: Some(w), .. } => {
            let map = CircleMapLift::critical_sine(k, w).map_err(lab)?;
            let x0 = map.critical_points().first().map(|c| c.c).unwrap_or(0.0);
            let rho = rotation_number(&map, x0, DEEP_RETURN, 1e-12).map_err(lab)?.value;
            (map, rho, None)
        }
        MapSpec::KCriticalSine { k, target, .. } => {
            let target = target.unwrap_or(GOLDEN_MEAN);
            let tuning = tune_omega(ParametricFamily::CriticalSine { k }, target, 1e-14).map_err(lab)?;
            let map = CircleMapLift::critical_sine(k, tuning.omega).map_err(lab)?;
            (map, target, Some(tuning.omega))
        }
    };
    let cf = continued_fraction(rho, 40).map_err(lab)?;
    let base = map.critical_points().first().map(|c| c.c).unwrap_or(0.0);
    Ok(Setup {
        map,
        cf,
        rho,
        base,
        tuned_omega,
    })
}

fn random_points(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen::<f64>()).collect()
}

fn is_precision_error(e: &LabError) -> bool {
    matches!(
        e,
        LabError::BeyondPrecision { .. }
            | LabError::LevelBeyondExpansion { .. }
            | LabError::CombinatoricsMismatch { .. }
    )
}

fn precision_check(level: usize, e: &LabError) -> Check {
    Check::with_verdict(
        &format!("precision floor at level {level}: {e}"),
        Verdict::Inconclusive,
        level as f64,
        0.0,
        "levels beyond the precision floor are not evaluated",
    )
}

pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    if config.experiment == Experiment::Denjoy {
        return denjoy(config);
    }
    let setup = setup(&config.map)?;
    match config.experiment {
        Experiment::Rotnum => rotnum(config, &setup),
        Experiment::Partition => partition(config, &setup),
        Experiment::Realbounds => realbounds(config, &setup),
        Experiment::Automorphic => automorphic(config, &setup),
        Experiment::Agreement => agreement(config, &setup),
        Experiment::Lyapunov => lyapunov(config, &setup),
        Experiment::Sigma => sigma(config, &setup),
        Experiment::OmegaScan => omega_scan(config, &setup),
        Experiment::Cobound => cobound(config, &setup),
        Experiment::Dk => dk(config, &setup),
        Experiment::Denjoy => unreachable!(),
    }
}

fn rotnum(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let budget = config.iterations.max(1000) as u64;
    let est = rotation_number(&setup.map, setup.base, budget, config.tolerance).map_err(lab)?;
    let (kind, fraction) = match est.kind {
        RotationKind::Irrational => ("irrational", None),
        RotationKind::Rational { p, q } => ("rational", Some(format!("{p}/{q}"))),
    };
    let mut checks = vec![Check::with_verdict(
        "rotation number resolved",
        if est.converged || fraction.is_some() {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        },
        est.error,
        config.tolerance,
        "rational orbit found, or convergent bracket <= tolerance",
    )];
    if let MapSpec::KCriticalSine { target: Some(t), .. } = config.map {
        checks.push(Check::at_most(
            "tuned rotation number matches target",
            (est.value - t).abs(),
            est.error + config.tolerance,
        ));
    }
    let r = &est.returns;
    let rows = (0..r.times.len())
        .map(|i| {
            format!(
                "{},{},{:.17e},{:.17e}",
                r.times[i], r.displacements[i], r.signed_gaps[i], r.distances[i]
            )
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "rotation_number": est.value,
            "error": est.error,
            "kind": kind,
            "fraction": fraction,
            "raw_average": est.raw_average,
            "converged": est.converged,
            "tuned_omega": setup.tuned_omega,
            "closest_return_times": r.times,
            "precision_floor_reached": r.floor_reached,
        }),
        checks,
        series: vec![CsvSeries {
            file: "returns.csv".into(),
            kind: "closest-returns",
            columns: columns::RETURNS,
            rows,
        }],
    })
}

fn partition(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    let mut atoms = Vec::new();
    let mut ratios = Vec::new();
    let (mut star, mut double_star) = (0usize, 0usize);
    let (mut worst_cover, mut worst_overlap, mut count_mismatch) = (0.0f64, 0.0f64, 0usize);
    for level in 1..=config.levels {
        let p = match build_partition(&setup.map, setup.base, level, &setup.cf) {
            Ok(p) => p,
            Err(e) if is_precision_error(&e) => {
                checks.push(precision_check(level, &e));
                break;
            }
            Err(e) => return Err(lab(e)),
        };
        let r = verify_partition(&p);
        let m1 = p.image_family_multiplicity(1);
        let m3 = p.image_family_multiplicity(3);
        star = star.max(m1.unwrap_or(0));
        double_star = double_star.max(m3.unwrap_or(0));
        worst_cover = worst_cover.max(r.covering_defect);
        worst_overlap = worst_overlap.max(r.overlap_defect);
        if r.count != r.expected_count {
            count_mismatch += 1;
        }
        ratios.push(p.max_adjacent_ratio());
        summary.push(format!(
            "{level},{},{},{:.3e},{:.3e},{},{},{:.17e}",
            r.count,
            r.expected_count,
            r.covering_defect,
            r.overlap_defect,
            m1.map(|m| m.to_string()).unwrap_or_default(),
            m3.map(|m| m.to_string()).unwrap_or_default(),
            p.max_adjacent_ratio()
        ));
        atoms.extend(p.csv_rows());
    }
    checks.push(Check::at_most("atom count mismatches", count_mismatch as f64, 0.0));
    checks.push(Check::at_most("covering defect", worst_cover, PARTITION_TOL));
    checks.push(Check::at_most("overlap defect", worst_overlap, PARTITION_TOL));
    checks.push(Check::at_most(
        "Delta* image multiplicity",
        star as f64,
        STAR_MULTIPLICITY as f64,
    ));
    checks.push(Check::at_most(
        "Delta** image multiplicity",
        double_star as f64,
        DOUBLE_STAR_MULTIPLICITY as f64,
    ));
    let window = &ratios[ratios.len().saturating_sub(5)..];
    checks.push(Check::at_most(
        "growth rate of adjacent ratios over the last 5 levels",
        log_growth_rate(window),
        NO_GROWTH_RATE,
    ));
    Ok(Outcome {
        results: json!({
            "base_point": setup.base,
            "rotation_number": setup.rho,
            "max_adjacent_ratios": ratios,
            "multiplicity_star": star,
            "multiplicity_double_star": double_star,
        }),
        checks,
        series: vec![
            CsvSeries {
                file: "partition_summary.csv".into(),
                kind: "partition-summary",
                columns: columns::PARTITION_SUMMARY,
                rows: summary,
            },
            CsvSeries {
                file: "partition_atoms.csv".into(),
                kind: "partition-atoms",
                columns: columns::PARTITION,
                rows: atoms,
            },
        ],
    })
}

fn realbounds(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let scan = real_bounds_scan(&setup.map, setup.base, &setup.cf, config.levels).map_err(lab)?;
    let values: Vec<f64> = scan.levels.iter().map(|l| l.max_ratio).collect();
    let window = &values[values.len().saturating_sub(5)..];
    let rows = scan
        .levels
        .iter()
        .map(|l| format!("{},{},{:.17e}", l.level, l.q_n, l.max_ratio))
        .collect();
    let contrast: Vec<f64> = scan.rotation_contrast.iter().map(|l| l.max_ratio).collect();
    Ok(Outcome {
        results: json!({
            "c_hat": scan.c_hat,
            "max_ratios": values,
            "rotation_contrast": contrast,
            "growth_trend": has_growth_trend(window),
        }),
        checks: vec![Check::at_most(
            "growth rate of adjacent ratios over the last 5 levels",
            log_growth_rate(window),
            NO_GROWTH_RATE,
        )],
        series: vec![CsvSeries {
            file: "real_bounds.csv".into(),
            kind: "real-bounds",
            columns: columns::LEVEL_SERIES,
            rows,
        }],
    })
}

fn automorphic(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let s = config.s.unwrap_or(1.0);
    let sol = solve_automorphic(&setup.map, s, config.bins, config.iterations, config.tolerance).map_err(lab)?;
    let DiscreteMeasure::Grid { values } = &sol.density else {
        unreachable!()
    };
    let to_uniform = density_l1(values, &vec![1.0; values.len()]);
    let mut checks = vec![Check::with_verdict(
        "Cesaro average converged",
        if sol.converged {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        },
        sol.last_change,
        config.tolerance,
        "successive averages within tolerance and residual not stalled",
    )];
    if s == 1.0 {
        checks.push(Check::at_most("L1 distance to Lebesgue", to_uniform, UNIFORM_L1));
    }
    let (cols, rows) = measure_rows(&sol.density);
    Ok(Outcome {
        results: json!({
            "s": s,
            "bins": config.bins,
            "iterations": sol.iterations,
            "residual": sol.residual,
            "l1_to_uniform": to_uniform,
            "defect": sol.defect.max,
            "defect_per_function": sol.defect.per_function,
            "converged": sol.converged,
        }),
        checks,
        series: vec![
            CsvSeries {
                file: "density.csv".into(),
                kind: "density",
                columns: cols,
                rows,
            },
            CsvSeries {
                file: "residuals.csv".into(),
                kind: "residuals",
                columns: columns::RESIDUALS,
                rows: sol
                    .residual_series
                    .iter()
                    .map(|(k, r)| format!("{k},{r:.17e}"))
                    .collect(),
            },
        ],
    })
}

fn agreement(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let exponents = match config.s {
        Some(s) => vec![s],
        None => vec![0.0, 0.5, 1.0, 2.0],
    };
    let level = setup
        .cf
        .q
        .iter()
        .position(|&q| q >= AGREEMENT_RETURN)
        .unwrap_or(setup.cf.depth());
    let q = setup.cf.q[level] as usize;
    let x = 0.5;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for s in exponents {
        let sol = solve_automorphic(&setup.map, s, config.bins, config.iterations, config.tolerance).map_err(lab)?;
        let mu = orbit_sum_measure(&setup.map, x, s, q).map_err(lab)?;
        let d = l1_distance(&sol.density, &mu.measure, COMPARE_BINS);
        checks.push(Check::at_most(
            &format!("construction agreement at s = {s}"),
            d,
            AGREEMENT_L1,
        ));
        rows.push(format!("{s},{q},{d:.17e},{:.17e},{}", sol.residual, sol.converged));
        results.push(json!({"s": s, "l1": d, "residual": sol.residual, "converged": sol.converged, "transfer_defect": sol.defect.max}));
    }
    Ok(Outcome {
        results: json!({"q_n": q, "base_point": x, "compare_bins": COMPARE_BINS, "runs": results}),
        checks,
        series: vec![CsvSeries {
            file: "agreement.csv".into(),
            kind: "agreement",
            columns: columns::AGREEMENT,
            rows,
        }],
    })
}

fn lyapunov(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let level = config.levels.min(setup.cf.depth());
    let q = setup.cf.q[level] as usize;
    let c1 = empirical_c1(&setup.map, &setup.cf, level, config.grid);
    let bound = c1.ln() / q as f64;
    let mut rows = Vec::new();
    let (mut upper, mut two_sided) = (0usize, 0usize);
    let mut estimates = Vec::new();
    for x in random_points(config.seed, config.points) {
        let trace = eval_orbit(&setup.map, x, q).map_err(lab)?;
        let estimate = trace.log_derivs[q] / q as f64;
        if estimate > bound {
            upper += 1;
        }
        if estimate.abs() > bound {
            two_sided += 1;
        }
        rows.push(format!("{x:.17e},{estimate:.17e},{bound:.17e}"));
        estimates.push(estimate);
    }
    Ok(Outcome {
        results: json!({"q_n": q, "c1_hat": c1, "bound": bound, "estimates": estimates}),
        checks: vec![
            Check::at_most("points above log(C1_hat)/q_n", upper as f64, 0.0),
            Check::at_most("points outside +-log(C1_hat)/q_n", two_sided as f64, 0.0),
        ],
        series: vec![CsvSeries {
            file: "lyapunov.csv".into(),
            kind: "lyapunov",
            columns: columns::LYAPUNOV,
            rows,
        }],
    })
}

fn sigma(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let s = config.s.unwrap_or(1.0);
    let n = config.iterations;
    let stride = (n / 1000).max(1);
    let mut rows = Vec::new();
    let mut min_final = f64::INFINITY;
    let mut min_growth = f64::INFINITY;
    let mut saturated = false;
    for x in random_points(config.seed, config.points) {
        let series = sigma_partial(&setup.map, x, s, n).map_err(lab)?;
        saturated |= series.saturated;
        let sums = &series.partial_sums;
        min_final = min_final.min(sums[n]);
        for k in 1..10 {
            let (a, b) = (k * n / 10, (k + 1) * n / 10);
            min_growth = min_growth.min((sums[b] - sums[a]) / sums[n]);
        }
        rows.extend(
            (0..=n)
                .step_by(stride)
                .map(|i| format!("{x:.17e},{i},{:.17e}", sums[i])),
        );
    }
    let mut checks = vec![
        Check::at_least("smallest Sigma_N", min_final, 1e3),
        Check::with_verdict(
            "smallest relative growth per tenth of the last decade",
            if min_growth > PLATEAU_TOL {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            min_growth,
            PLATEAU_TOL,
            "measured > threshold",
        ),
    ];
    let mut preimage_drift = None;
    if let Some(c) = setup.map.critical_points().first() {
        let y = backward_orbit(&setup.map, c.c, CRITICAL_PREIMAGE_DEPTH);
        let series = sigma_partial(&setup.map, y, s, n).map_err(lab)?;
        let settled = series.partial_sums[CRITICAL_PREIMAGE_DEPTH];
        let drift = (series.partial_sums[n] - settled) / settled;
        checks.push(Check::at_most(
            "critical preimage drift after depth",
            drift,
            PLATEAU_TOL,
        ));
        rows.extend(
            (0..=n)
                .step_by(stride)
                .map(|i| format!("{y:.17e},{i},{:.17e}", series.partial_sums[i])),
        );
        preimage_drift = Some(drift);
    }
    Ok(Outcome {
        results: json!({
            "s": s,
            "n": n,
            "min_sigma_n": min_final,
            "min_relative_growth": min_growth,
            "critical_preimage_drift": preimage_drift,
            "saturated": saturated,
        }),
        checks,
        series: vec![CsvSeries {
            file: "sigma.csv".into(),
            kind: "sigma",
            columns: columns::SIGMA,
            rows,
        }],
    })
}

fn omega_scan(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let s = config.s.unwrap_or(1.0);
    let sol = solve_automorphic(&setup.map, s, config.bins, config.iterations, config.tolerance).map_err(lab)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let (mut long_spread, mut short_spread, mut b_hat) = (Vec::new(), Vec::new(), 0.0f64);
    for level in 4..=config.levels.max(4) {
        let p = match build_partition(&setup.map, setup.base, level, &setup.cf) {
            Ok(p) => p,
            Err(e) if is_precision_error(&e) => {
                checks.push(precision_check(level, &e));
                break;
            }
            Err(e) => return Err(lab(e)),
        };
        let scan = omega_ratio_scan(&sol.density, &p, s).map_err(lab)?;
        long_spread.push(scan.long_spread());
        short_spread.push(scan.short_spread());
        b_hat = b_hat.max(scan.b_hat);
        rows.push(format!(
            "{level},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            scan.long_max,
            scan.long_min,
            scan.short_max,
            scan.short_min,
            scan.short_to_long_max,
            scan.b_hat,
            scan.skipped
        ));
    }
    let tail = |v: &[f64]| log_growth_rate(&v[v.len().saturating_sub(5)..]);
    checks.push(Check::at_most(
        "growth rate of long/long spread",
        tail(&long_spread),
        NO_GROWTH_RATE,
    ));
    checks.push(Check::at_most(
        "growth rate of short/short spread",
        tail(&short_spread),
        NO_GROWTH_RATE,
    ));
    Ok(Outcome {
        results: json!({
            "s": s,
            "b_hat": b_hat,
            "long_spread": long_spread,
            "short_spread": short_spread,
            "transfer_converged": sol.converged,
        }),
        checks,
        series: vec![CsvSeries {
            file: "omega.csv".into(),
            kind: "omega-scan",
            columns: columns::OMEGA,
            rows,
        }],
    })
}

fn cobound(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let top = config.levels.min(setup.cf.depth());
    let c1 = empirical_c1(&setup.map, &setup.cf, top, config.grid);
    let (mut worst_scaled, mut worst_agreement) = (0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for k in 6..=top {
        let q = setup.cf.q[k] as usize;
        let d = coboundary_defect(&setup.map, q, config.grid).map_err(lab)?;
        let scaled = d.direct * q as f64;
        worst_scaled = worst_scaled.max(scaled);
        worst_agreement = worst_agreement
            .max(d.max_disagreement)
            .max((d.direct - d.closed_form).abs());
        rows.push(format!(
            "{k},{q},{:.17e},{:.17e},{:.3e},{scaled:.17e}",
            d.direct, d.closed_form, d.max_disagreement
        ));
    }
    let mut checks = vec![
        Check::at_most("max q_k * defect", worst_scaled, 1.0 + c1),
        Check::at_most("direct vs closed form", worst_agreement, IDENTITY_TOL),
    ];
    let mut w_mean = None;
    if top >= 8 {
        let w = w_hat(&setup.map, setup.cf.q[8] as usize, config.grid).map_err(lab)?;
        checks.push(Check::at_most(
            "|integral of w_hat| at k = 8",
            w.integral.abs(),
            W_HAT_MEAN_TOL,
        ));
        w_mean = Some(w.integral);
    }
    Ok(Outcome {
        results: json!({"c1_hat": c1, "max_scaled_defect": worst_scaled, "max_disagreement": worst_agreement, "w_hat_integral_k8": w_mean}),
        checks,
        series: vec![CsvSeries {
            file: "cobound.csv".into(),
            kind: "coboundary-defect",
            columns: columns::COBOUND,
            rows,
        }],
    })
}

fn dk(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let phi = TrigPolynomial::sin(1);
    let variation = SampledFunction::sample(&phi, config.grid).variation;
    let (mean, deep) = match config.map {
        MapSpec::Rotation { .. } => (MeanEstimate::exact(0.0), None),
        _ => {
            let level = setup.cf.level_below(DEEP_RETURN);
            let q = setup.cf.q[level] as usize;
            (birkhoff_mean(&setup.map, &phi, setup.base, q, variation), Some(q))
        }
    };
    let series = dk_improved_series(&setup.map, &phi, &setup.cf, config.levels, mean, setup.base).map_err(lab)?;
    let last = series.levels.last().map(|l| l.deviation.deviation).unwrap_or(0.0);
    let reference = series
        .levels
        .iter()
        .filter(|l| (4..=6).contains(&l.level))
        .map(|l| l.deviation.deviation)
        .fold(0.0, f64::max);
    let check = Check::with_verdict(
        "d_nmax against half of max(d_4, d_5, d_6)",
        series.verdict,
        last,
        0.5 * reference,
        "pass iff d_nmax + u <= (max d_ref - u)/2; inconclusive when uncertainty dominates",
    );
    let bound_check = Check::at_most(
        "largest d_n minus var(phi) and its uncertainty",
        series
            .levels
            .iter()
            .map(|l| l.deviation.deviation - l.deviation.uncertainty)
            .fold(f64::NEG_INFINITY, f64::max),
        variation,
    );
    Ok(Outcome {
        results: json!({
            "observable": "sin(2 pi x)",
            "variation": variation,
            "mean": series.mean,
            "mean_return_time": deep,
            "levels": series.levels,
            "verdict": series.verdict,
        }),
        checks: vec![check, bound_check],
        series: vec![CsvSeries {
            file: "dk.csv".into(),
            kind: "denjoy-koksma",
            columns: columns::DK_SERIES,
            rows: series.csv_rows(),
        }],
    })
}

fn denjoy(config: &RunConfig) -> Result<Outcome, CliError> {
    let rho = match config.map {
        MapSpec::Rotation { rho } => rho.rem_euclid(1.0),
        MapSpec::KCriticalSine { target, .. } => target.unwrap_or(GOLDEN_MEAN),
    };
    let n = config.truncation;
    let map = DenjoyMap::new(rho, n, DEFAULT_LENGTH_EXPONENT).map_err(lab)?;
    let depth = n.min(500);
    let cert = wandering_certificate(&map, depth);
    let i0 = *map.interval(0).expect("table contains I_0");
    let x = i0.left + 0.5 * i0.length();
    let tests = TestFunctionSet::default();
    let nu = denjoy_atomic_measure(&map, x, n).map_err(lab)?;
    let defect = automorphic_defect(&nu.measure, &map, 1.0, &tests).map_err(lab)?.max;
    let max_ratio = map
        .intervals()
        .windows(2)
        .map(|w| w[1].length() / w[0].length())
        .fold(1.0, f64::max);
    let tail_bound = nu.tail / nu.normalizer * max_ratio;

    let mut checks = vec![
        Check::with_verdict(
            "wandering certificate",
            if cert.wandering { Verdict::Pass } else { Verdict::Fail },
            cert.images_checked as f64,
            (2 * depth + 1) as f64,
            "all images pairwise disjoint",
        ),
        Check::at_most("automorphic defect against tail bound", defect, tail_bound),
    ];
    let mut decay = None;
    if 2 * n <= MAX_TRUNCATION {
        let double = DenjoyMap::new(rho, 2 * n, DEFAULT_LENGTH_EXPONENT).map_err(lab)?;
        let j0 = *double.interval(0).expect("table contains I_0");
        let nu2 = denjoy_atomic_measure(&double, j0.left + 0.5 * j0.length(), 2 * n).map_err(lab)?;
        let d2 = automorphic_defect(&nu2.measure, &double, 1.0, &tests).map_err(lab)?.max;
        let ratio = defect / d2;
        checks.push(Check::with_verdict(
            "defect decay factor on doubling N",
            if (4.0..=16.0).contains(&ratio) {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            ratio,
            8.0,
            "measured within a factor 2 of threshold",
        ));
        decay = Some(ratio);
    }

    let at = x + 0.1 * i0.length();
    let bump = Bump {
        center: x,
        half_width: 0.4 * i0.length(),
        scale: 1.0,
    }
    .with_slope_at(at, 1.0);
    let nu_b = denjoy_atomic_measure(&map, at, n).map_err(lab)?;
    let pairing = distribution_pairing(&nu_b.measure, &bump);
    let limit_error = (pairing - 1.0 / (nu_b.normalizer + nu_b.tail)).abs();
    checks.push(Check::at_most(
        "pairing against 1/S of the untruncated sum",
        limit_error,
        nu_b.tail / nu_b.normalizer,
    ));
    let y = complement_point(&map, 0.25);
    let cantor_mean = complement_average(&map, &bump, y, config.iterations.max(1000)).map_err(lab)?;
    checks.push(Check::at_most(
        "|integral of u against the invariant measure|",
        cantor_mean.abs(),
        1e-12,
    ));

    Ok(Outcome {
        results: json!({
            "rho": rho,
            "truncation": n,
            "certificate": cert,
            "normalizer": nu.normalizer,
            "tail": nu.tail,
            "defect": defect,
            "tail_bound": tail_bound,
            "decay_on_doubling": decay,
            "pairing": pairing,
            "one_over_s": 1.0 / nu_b.normalizer,
            "cantor_mean": cantor_mean,
        }),
        checks,
        series: vec![CsvSeries {
            file: "denjoy_table.csv".into(),
            kind: "denjoy-table",
            columns: columns::DENJOY_TABLE,
            rows: map.csv_rows(),
        }],
    })
}

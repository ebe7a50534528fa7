//! Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

mod common;

use std::time::{Duration, Instant};

use circle_lab_core::cohomology::{birkhoff_mean, coboundary_defect, dk_improved_series, MeanEstimate, Verdict};
use circle_lab_core::denjoy::{
    complement_average, complement_point, denjoy_atomic_measure, distribution_pairing, wandering_certificate, DenjoyMap,
};
use circle_lab_core::map::{backward_orbit, eval_orbit};
use circle_lab_core::measure::{
    automorphic_defect, density_l1, empirical_c1, l1_distance, orbit_sum_measure, sigma_partial, solve_automorphic,
    DiscreteMeasure, COMPARE_BINS, DEFAULT_BINS,
};
use circle_lab_core::observable::{Bump, SampledFunction, TestFunctionSet, TrigPolynomial};
use circle_lab_core::partition::{build_partition, has_growth_trend, verify_partition};
use circle_lab_core::GOLDEN_MEAN;
use common::{golden, level_of, uniform_points};

/// Seed for every random draw in this file, fixed before any run.
const SEED: u64 = 20_261_016;

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let within = elapsed <= limit;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    println!(
        "[acceptance] criterion {id} {verdict}: {name} | {detail} | {:.2}s (limit {}s)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(within, "criterion {id} exceeded its runtime budget");
}

#[test]
fn criterion_1_telescoping_defect() {
    let start = Instant::now();
    let g = golden();
    let tests = TestFunctionSet::default();
    let x = 0.5;
    let mut worst: f64 = 0.0;
    for s in [0.5, 1.0, 2.0] {
        for q in [233usize, 987, 4181] {
            let mu = orbit_sum_measure(&g.map, x, s, q).unwrap();
            let report = automorphic_defect(&mu.measure, &g.map, s, &tests).unwrap();
            for (phi, (_, defect)) in tests.functions.iter().zip(&report.per_function) {
                worst = worst.max((defect - mu.telescoped_defect(phi)).abs());
            }
        }
    }
    report(
        1,
        "telescoping automorphic defect",
        worst <= 1e-12,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("max |defect - telescoped| = {worst:.3e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_2_lebesgue_uniqueness() {
    let start = Instant::now();
    let g = golden();
    let solution = solve_automorphic(&g.map, 1.0, DEFAULT_BINS, 20_000, 1e-6).unwrap();
    let DiscreteMeasure::Grid { values } = &solution.density else {
        unreachable!()
    };
    let grid_distance = density_l1(values, &vec![1.0; values.len()]);

    let mu = orbit_sum_measure(&g.map, 0.5, 1.0, 4181).unwrap();
    let orbit_distance = l1_distance(&mu.measure, &DiscreteMeasure::uniform(COMPARE_BINS), COMPARE_BINS);
    report(
        2,
        "Lebesgue uniqueness at s = 1",
        grid_distance <= 0.01 && orbit_distance <= 0.05,
        start.elapsed(),
        Duration::from_secs(120),
        &format!(
            "transfer L1 = {grid_distance:.3e} (tol 0.01), orbit-sum L1 at q=4181 over {COMPARE_BINS} bins = {orbit_distance:.3e} (tol 0.05)"
        ),
    );
}

#[test]
fn criterion_3_construction_agreement() {
    let start = Instant::now();
    let g = golden();
    let q = 10_946usize;
    let mut distances = Vec::new();
    for s in [0.0, 0.5, 2.0] {
        let solution = solve_automorphic(&g.map, s, DEFAULT_BINS, 20_000, 1e-5).unwrap();
        let mu = orbit_sum_measure(&g.map, 0.5, s, q).unwrap();
        distances.push((s, l1_distance(&solution.density, &mu.measure, COMPARE_BINS)));
    }
    let pass = distances.iter().all(|&(_, d)| d <= 0.05);
    let detail = distances
        .iter()
        .map(|(s, d)| format!("s={s}: {d:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        3,
        "transfer operator vs orbit sums",
        pass,
        start.elapsed(),
        Duration::from_secs(300),
        &format!("L1 over {COMPARE_BINS} bins at q={q}: {detail} (tol 0.05)"),
    );
}

#[test]
fn criterion_4_zero_lyapunov_exponent() {
    let start = Instant::now();
    let g = golden();
    let n = level_of(&g.cf, 4181);
    let c1 = empirical_c1(&g.map, &g.cf, n, 1 << 13);
    let bound = c1.ln() / 4181.0;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for x in uniform_points(SEED, 10) {
        let trace = eval_orbit(&g.map, x, 4181).unwrap();
        let estimate = trace.log_derivs[4181] / 4181.0;
        worst = worst.max(estimate.abs());
        if estimate.abs() > bound {
            failures += 1;
        }
    }
    report(
        4,
        "zero Lyapunov exponent",
        failures == 0,
        start.elapsed(),
        Duration::from_secs(30),
        &format!(
            "C1_hat = {c1:.4}, bound log(C1_hat)/q = {bound:.3e}, max |estimate| = {worst:.3e}, {failures}/10 points outside"
        ),
    );
}

#[test]
fn criterion_5_coboundary_defect_law() {
    let start = Instant::now();
    let g = golden();
    let c1 = empirical_c1(&g.map, &g.cf, 12, 1 << 13);
    let mut worst_scaled: f64 = 0.0;
    let mut worst_agreement: f64 = 0.0;
    for k in 6..=12 {
        let q = g.cf.q[k] as usize;
        let d = coboundary_defect(&g.map, q, 1 << 13).unwrap();
        worst_scaled = worst_scaled.max(d.direct * q as f64);
        worst_agreement = worst_agreement
            .max(d.max_disagreement)
            .max((d.direct - d.closed_form).abs());
    }
    report(
        5,
        "coboundary defect law",
        worst_scaled <= 1.0 + c1 && worst_agreement <= 1e-10,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "max q_k * defect = {worst_scaled:.4} (bound 1 + C1_hat = {:.4}), max disagreement = {worst_agreement:.3e}",
            1.0 + c1
        ),
    );
}

#[test]
fn criterion_6_improved_denjoy_koksma() {
    let start = Instant::now();
    let g = golden();
    let phi = TrigPolynomial::sin(1);
    let variation = SampledFunction::sample(&phi, 1 << 13).variation;

    let rigid = dk_improved_series(&g.rotation, &phi, &g.cf, 11, MeanEstimate::exact(0.0), 0.0).unwrap();
    let deep = g.cf.q[29] as usize;
    let mean = birkhoff_mean(&g.map, &phi, 0.0, deep, variation);
    let critical = dk_improved_series(&g.map, &phi, &g.cf, 11, mean, 0.0).unwrap();

    let fmt = |series: &circle_lab_core::cohomology::DkSeries| {
        series
            .levels
            .iter()
            .map(|l| format!("{:.2e}±{:.1e}", l.deviation.deviation, l.deviation.uncertainty))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let complete = critical.levels.len() == 8 && critical.levels.iter().all(|l| l.deviation.deviation.is_finite());
    let pass = rigid.verdict == Verdict::Pass && complete && critical.verdict != Verdict::Fail;
    report(
        6,
        "improved Denjoy-Koksma",
        pass,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "rigid verdict {} [{}], critical verdict {} [{}] (mean from q={deep})",
            rigid.verdict.as_str(),
            fmt(&rigid),
            critical.verdict.as_str(),
            fmt(&critical)
        ),
    );
}

#[test]
fn criterion_7_partition_combinatorics() {
    let start = Instant::now();
    let g = golden();
    let mut problems = Vec::new();
    let mut ratios = Vec::new();
    let (mut star, mut double_star) = (0usize, 0usize);
    for level in 4..=10 {
        let p = build_partition(&g.map, 0.0, level, &g.cf).unwrap();
        let r = verify_partition(&p);
        if p.len() != p.expected_len() || r.covering_defect > 1e-10 || r.overlap_defect > 1e-10 {
            problems.push(format!("level {level}: {r:?}"));
        }
        match (p.image_family_multiplicity(1), p.image_family_multiplicity(3)) {
            (Some(a), Some(b)) => {
                star = star.max(a);
                double_star = double_star.max(b);
            }
            _ => problems.push(format!("level {level}: neighbourhood wraps the circle")),
        }
        ratios.push(p.max_adjacent_ratio());
    }
    let trend = has_growth_trend(&ratios[ratios.len() - 5..]);
    let pass = problems.is_empty() && star <= 3 && double_star <= 8 && !trend;
    report(
        7,
        "partition combinatorics",
        pass,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "multiplicity {star} / {double_star} (bounds 3 / 8), adjacent ratios {ratios:.3?}, growth trend {trend}, problems {problems:?}"
        ),
    );
}

#[test]
fn criterion_8_denjoy_counterexample() {
    let start = Instant::now();
    let n = 1000;
    let map = DenjoyMap::new(GOLDEN_MEAN, n, 3.0).unwrap();
    let double = DenjoyMap::new(GOLDEN_MEAN, 2 * n, 3.0).unwrap();
    let cert = wandering_certificate(&map, 500);

    let i0 = *map.interval(0).unwrap();
    let x = i0.left + 0.5 * i0.length();
    let tests = TestFunctionSet::default();
    let nu = denjoy_atomic_measure(&map, x, n).unwrap();
    let defect = automorphic_defect(&nu.measure, &map, 1.0, &tests).unwrap().max;
    let max_ratio = map
        .intervals()
        .windows(2)
        .map(|w| w[1].length() / w[0].length())
        .fold(1.0, f64::max);
    let tail_bound = nu.tail / nu.normalizer * max_ratio;

    let i0d = *double.interval(0).unwrap();
    let xd = i0d.left + 0.5 * i0d.length();
    let nu2 = denjoy_atomic_measure(&double, xd, 2 * n).unwrap();
    let defect2 = automorphic_defect(&nu2.measure, &double, 1.0, &tests).unwrap().max;
    let decay = defect / defect2;

    let bump = Bump {
        center: x,
        half_width: 0.4 * i0.length(),
        scale: 1.0,
    }
    .with_slope_at(x + 0.1 * i0.length(), 1.0);
    let nu_b = denjoy_atomic_measure(&map, x + 0.1 * i0.length(), n).unwrap();
    let pairing = distribution_pairing(&nu_b.measure, &bump);
    let pairing_error = (pairing - 1.0 / nu_b.normalizer).abs();
    let limit_error = (pairing - 1.0 / (nu_b.normalizer + nu_b.tail)).abs();
    let y = complement_point(&map, 0.25);
    let cantor_mean = complement_average(&map, &bump, y, 100_000).unwrap();

    let pass = cert.wandering
        && defect <= tail_bound
        && (4.0..=16.0).contains(&decay)
        && pairing_error <= 1e-12
        && limit_error <= nu_b.tail / nu_b.normalizer
        && cantor_mean.abs() <= 1e-12
        && pairing.abs() > 0.0;
    report(
        8,
        "Denjoy counterexample",
        pass,
        start.elapsed(),
        Duration::from_secs(30),
        &format!(
            "certificate {:?}, defect {defect:.3e} <= tail bound {tail_bound:.3e}, decay x{decay:.2} on doubling, <T,u> = {pairing:.6e} vs 1/S = {:.6e}, Cantor mean {cantor_mean:.1e}",
            cert.wandering,
            1.0 / nu_b.normalizer
        ),
    );
}

#[test]
fn criterion_9_sigma_divergence() {
    let start = Instant::now();
    let g = golden();
    let big_n = 100_000;
    let mut worst_final = f64::INFINITY;
    let mut worst_growth = f64::INFINITY;
    for x in uniform_points(SEED + 9, 10) {
        let sigma = sigma_partial(&g.map, x, 1.0, big_n).unwrap();
        let sums = &sigma.partial_sums;
        worst_final = worst_final.min(sums[big_n]);
        // relative growth over each tenth of the last decade
        for k in 1..10 {
            let (a, b) = (k * big_n / 10, (k + 1) * big_n / 10);
            worst_growth = worst_growth.min((sums[b] - sums[a]) / sums[big_n]);
        }
    }

    // depth-20 preimage of the critical point
    let y = backward_orbit(&g.map, 0.0, 20);
    let sigma = sigma_partial(&g.map, y, 1.0, big_n).unwrap();
    let settled = sigma.partial_sums[20];
    let drift = (sigma.partial_sums[big_n] - settled) / settled;

    // one relative tolerance decides both "still growing" and "constant"
    let plateau = 1e-9;
    let pass = worst_final > 1e3 && worst_growth > plateau && drift <= plateau;
    report(
        9,
        "Sigma divergence contrast",
        pass,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "min Sigma_N = {worst_final:.3e}, min growth per tenth of last decade = {worst_growth:.3e}, preimage drift after n=20 = {drift:.1e}"
        ),
    );
}

mod common;

use circle_lab_core::map::{backward_orbit, eval_orbit, CircleMap, CircleMapLift};
use circle_lab_core::measure::{
    automorphic_defect, density_l1, empirical_c1, omega_ratio_scan, orbit_sum_measure, sigma_partial,
    solve_automorphic, transfer_step, DiscreteMeasure, TransferOperator,
};
use circle_lab_core::observable::TestFunctionSet;
use circle_lab_core::partition::{build_partition, has_growth_trend};
use circle_lab_core::GOLDEN_MEAN;
use common::{golden, level_of, uniform_points};
use proptest::prelude::*;

const SEED: u64 = 7_041_993;

#[test]
fn orbit_sum_weights_match_naive_products() {
    let g = golden();
    let q = 987;
    let mu = orbit_sum_measure(&g.map, 0.5, 1.0, q).unwrap();
    let DiscreteMeasure::Atomic { points, weights } = &mu.measure else {
        panic!("atomic")
    };

    // plain running products, summed smallest first
    let mut x = 0.5;
    let mut products = Vec::with_capacity(q);
    let mut d = 1.0f64;
    for _ in 0..q {
        products.push(d);
        d *= g.map.deriv(x);
        x = g.map.eval(x);
    }
    let mut sorted = products.clone();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();

    assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    for (i, (w, p)) in weights.iter().zip(&products).enumerate() {
        let expected = p / total;
        assert!((w - expected).abs() <= 1e-9 * expected, "atom {i}: {w} vs {expected}");
    }
    assert!((points[1] - g.map.eval(0.5)).abs() < 1e-15);
}

#[test]
fn zero_exponent_weights_are_uniform() {
    let g = golden();
    let mu = orbit_sum_measure(&g.map, 0.25, 0.0, 233).unwrap();
    let DiscreteMeasure::Atomic { weights, .. } = &mu.measure else {
        panic!("atomic")
    };
    assert!(weights.iter().all(|&w| (w - 1.0 / 233.0).abs() <= 1e-15));
}

#[test]
fn lebesgue_is_automorphic_of_exponent_one() {
    let tests = TestFunctionSet::default();
    let g = golden();
    let quartic = CircleMapLift::critical_sine(2, 0.3).unwrap();
    let rotation = CircleMapLift::rotation(GOLDEN_MEAN);
    let maps: [&dyn CircleMap; 3] = [&g.map, &quartic, &rotation];
    for map in maps {
        let defect = automorphic_defect(&DiscreteMeasure::uniform(1 << 14), map, 1.0, &tests).unwrap();
        assert!(defect.max <= 1e-10, "{defect:?}");
    }
}

#[test]
fn transfer_of_uniform_density() {
    let bins = 1 << 12;
    let uniform = DiscreteMeasure::uniform(bins);
    let ones = vec![1.0; bins];
    let g = golden();
    let quartic = CircleMapLift::critical_sine(2, 0.3).unwrap();
    for map in [&g.map, &quartic] {
        let DiscreteMeasure::Grid { values } = transfer_step(&uniform, map, 1.0).unwrap() else {
            panic!()
        };
        assert!(density_l1(&values, &ones) <= 1.0 / bins as f64);
    }
    let rotation = CircleMapLift::rotation(GOLDEN_MEAN);
    for s in [0.0, 0.5, 2.0] {
        let DiscreteMeasure::Grid { values } = transfer_step(&uniform, &rotation, s).unwrap() else {
            panic!()
        };
        assert!(density_l1(&values, &ones) <= 1e-12);
    }
}

#[test]
fn pushforward_preserves_mass() {
    let g = golden();
    let op = TransferOperator::new(&g.map, 0.0, 1 << 10).unwrap();
    let density: Vec<f64> = (0..1 << 10)
        .map(|i| 1.0 + 0.5 * (i as f64 / 1024.0 * 6.0).sin())
        .collect();
    let (image, norm) = op.apply_with_normalizer(&density).unwrap();
    let before: f64 = density.iter().sum::<f64>() / 1024.0;
    assert!((norm - before).abs() <= 1e-12 * before);
    assert!((image.iter().sum::<f64>() / 1024.0 - 1.0).abs() <= 1e-12);
}

#[test]
fn rotation_solution_is_fixed_immediately() {
    let sol = solve_automorphic(&CircleMapLift::rotation(GOLDEN_MEAN), 1.0, 1 << 10, 50, 1e-9).unwrap();
    assert!(sol.converged);
    assert!(sol.residual <= 1e-12);
    assert!(sol.defect.max <= 1e-10);
}

#[test]
fn lyapunov_estimates_collapse_to_boundary_terms() {
    let g = golden();
    let q = 987;
    let bound = empirical_c1(&g.map, &g.cf, level_of(&g.cf, q as u64), 1 << 13).ln() / q as f64;
    let estimate = |x: f64| eval_orbit(&g.map, x, q).unwrap().log_derivs[q] / q as f64;
    let (a, b) = (estimate(0.31), estimate(0.77));
    assert!(a <= bound && b <= bound);
    assert!(
        (a - b).abs() <= 2.0 * bound,
        "estimates {a:.3e} and {b:.3e}, bound {bound:.3e}"
    );
    let rigid = eval_orbit(&CircleMapLift::rotation(GOLDEN_MEAN), 0.31, q).unwrap();
    assert_eq!(rigid.log_derivs[q], 0.0);
}

#[test]
fn sigma_of_critical_preimage_is_a_finite_sum() {
    let g = golden();
    let depth = 6;
    let y = backward_orbit(&g.map, 0.0, depth);
    let sigma = sigma_partial(&g.map, y, 1.0, 5000).unwrap();
    let settled = sigma.partial_sums[depth];
    assert!(sigma.partial_sums[depth..].iter().all(|&v| v == settled));
    assert!(!sigma.saturated);
}

#[test]
fn sigma_diverges_at_random_points() {
    let g = golden();
    let n = 100_000;
    for x in uniform_points(SEED, 3) {
        let sums = sigma_partial(&g.map, x, 1.0, n).unwrap().partial_sums;
        assert!(sums[n] > 1e3);
        assert!(sums[n] > sums[n / 2]);
    }
}

#[test]
fn omega_ratios_of_lebesgue_stay_bounded() {
    let g = golden();
    let nu = DiscreteMeasure::uniform(1 << 16);
    let mut long = Vec::new();
    let mut short = Vec::new();
    for level in 4..=10 {
        let p = build_partition(&g.map, 0.0, level, &g.cf).unwrap();
        let scan = omega_ratio_scan(&nu, &p, 1.0).unwrap();
        long.push(scan.long_spread());
        short.push(scan.short_spread());
        assert!(scan.b_hat.is_finite());
    }
    assert!(!has_growth_trend(&long[2..]), "{long:?}");
    assert!(!has_growth_trend(&short[2..]), "{short:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orbit_sums_are_normalized_and_telescope(x in 0.0f64..1.0, s in 0.0f64..2.5, level in 3usize..12) {
        let g = golden();
        let q = g.cf.q[level] as usize;
        let mu = orbit_sum_measure(&g.map, x, s, q).unwrap();
        prop_assert!(mu.measure.is_normalized());
        let tests = TestFunctionSet::default();
        let report = automorphic_defect(&mu.measure, &g.map, s, &tests).unwrap();
        for (phi, (_, defect)) in tests.functions.iter().zip(&report.per_function) {
            let telescoped = mu.telescoped_defect(phi);
            prop_assert!((defect - telescoped).abs() <= 1e-12 * (1.0 + telescoped), "{} vs {}", defect, telescoped);
        }
    }

    #[test]
    fn transfer_keeps_densities_positive_and_normalized(s in 0.0f64..2.5, seed in 0u64..1000) {
        let g = golden();
        let bins = 256;
        let density: Vec<f64> = uniform_points(seed, bins).into_iter().map(|u| 0.1 + u).collect();
        let op = TransferOperator::new(&g.map, s, bins).unwrap();
        let image = op.apply(&density).unwrap();
        prop_assert!(image.iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert!((image.iter().sum::<f64>() / bins as f64 - 1.0).abs() <= 1e-12);
    }
}

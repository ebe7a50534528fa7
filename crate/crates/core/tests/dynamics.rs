//! Orbit evaluation, rotation numbers and continued fractions against brute-force oracles.

mod common;

use std::f64::consts::{PI, TAU};

use circle_lab_core::map::{eval_orbit, CircleMap, CircleMapLift, ParametricFamily};
use circle_lab_core::rotation::{
    closest_returns, continued_fraction, rotation_number, tune_omega, ContinuedFraction, RotationKind,
};
use circle_lab_core::{GOLDEN_MEAN, SILVER_MEAN};
use common::golden;
use proptest::prelude::*;

/// Product of derivatives kept as `mantissa * 2^exponent` so it can neither
/// overflow nor underflow.
struct ScaledProduct {
    mantissa: f64,
    exponent: i64,
}

impl ScaledProduct {
    fn one() -> Self {
        Self {
            mantissa: 1.0,
            exponent: 0,
        }
    }

    fn mul(&mut self, v: f64) {
        self.mantissa *= v;
        while self.mantissa.abs() >= 2.0 {
            self.mantissa /= 2.0;
            self.exponent += 1;
        }
        while self.mantissa != 0.0 && self.mantissa.abs() < 1.0 {
            self.mantissa *= 2.0;
            self.exponent -= 1;
        }
    }

    fn ln(&self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }
}

/// The cubic sine map written out by hand.
fn sine_lift(k: f64, omega: f64, x: f64) -> f64 {
    x + omega - (TAU * k * x).sin() / (TAU * k)
}

fn sine_deriv(k: f64, x: f64) -> f64 {
    2.0 * (PI * k * x).sin().powi(2)
}

#[test]
fn log_derivative_matches_scaled_product() {
    let (k, omega) = (1.0, 0.61);
    let map = CircleMapLift::critical_sine(1, omega).unwrap();
    let n = 1000;
    let trace = eval_orbit(&map, 0.5, n).unwrap();
    let mut x: f64 = 0.5;
    let mut product = ScaledProduct::one();
    for i in 1..=n {
        product.mul(sine_deriv(k, x));
        x = sine_lift(k, omega, x).rem_euclid(1.0);
        if i % 100 == 0 {
            assert!(
                (trace.log_derivs[i] - product.ln()).abs() <= 1e-8,
                "step {i}: {} vs {}",
                trace.log_derivs[i],
                product.ln()
            );
        }
    }
}

#[test]
fn rigid_rotation_orbit_and_flat_derivative() {
    let map = CircleMapLift::rotation(0.375);
    let trace = eval_orbit(&map, 0.0, 8).unwrap();
    let expected = [0.0, 0.375, 0.75, 0.125, 0.5, 0.875, 0.25, 0.625, 0.0];
    for (p, e) in trace.points.iter().zip(expected) {
        assert!((p - e).abs() < 1e-15);
    }
    assert!(trace.log_derivs.iter().all(|&l| l == 0.0));
    assert_eq!(trace.wraps[8], 3);
}

#[test]
fn golden_rotation_number() {
    let est = rotation_number(&CircleMapLift::rotation(GOLDEN_MEAN), 0.0, 100_000, 1e-10).unwrap();
    assert_eq!(est.kind, RotationKind::Irrational);
    assert!((est.value - 0.618_033_988_749_894_8).abs() <= 1e-10);
}

/// Brute-force closest-return scan: every `q` whose distance beats all earlier ones.
fn brute_force_returns<M: CircleMap>(map: &M, x0: f64, q_max: u64) -> Vec<u64> {
    let orbit: Vec<f64> = std::iter::successors(Some(x0), |&x| Some(map.eval(x)))
        .take(q_max as usize + 1)
        .collect();
    let dist = |y: f64| {
        let d = (y - x0).rem_euclid(1.0);
        d.min(1.0 - d)
    };
    (1..=q_max)
        .filter(|&q| (1..q).all(|j| dist(orbit[q as usize]) < dist(orbit[j as usize])))
        .collect()
}

#[test]
fn golden_rotation_returns_are_fibonacci() {
    let map = CircleMapLift::rotation(GOLDEN_MEAN);
    let returns = closest_returns(&map, 0.0, 100);
    assert_eq!(returns.times, vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    assert_eq!(returns.times, brute_force_returns(&map, 0.0, 100));
}

#[test]
fn rational_rotation_returns_stop_at_period() {
    let returns = closest_returns(&CircleMapLift::rotation(0.375), 0.0, 100);
    assert_eq!(*returns.times.last().unwrap(), 8);
    assert_eq!(*returns.distances.last().unwrap(), 0.0);
    assert!(returns.floor_reached);
}

#[test]
fn tuned_critical_map_has_golden_combinatorics() {
    let tuning = tune_omega(ParametricFamily::CriticalSine { k: 1 }, GOLDEN_MEAN, 1e-10).unwrap();
    assert!(tuning.omega > 0.60 && tuning.omega < 0.64, "omega = {}", tuning.omega);
    let map = CircleMapLift::critical_sine(1, tuning.omega).unwrap();
    let est = rotation_number(&map, 0.0, 1_000_000, 1e-10).unwrap();
    assert!((est.value - GOLDEN_MEAN).abs() <= 1e-10);

    let g = golden();
    let returns = closest_returns(&g.map, 0.0, 20_000);
    let fib: Vec<u64> = g.cf.q[1..].iter().copied().filter(|&q| q <= 20_000).collect();
    assert_eq!(returns.times, fib);
    let short: Vec<u64> = fib.iter().copied().filter(|&q| q <= 2000).collect();
    assert_eq!(brute_force_returns(&g.map, 0.0, 2000), short);
}

#[test]
fn quartic_map_tunes_to_silver_mean() {
    let tuning = tune_omega(ParametricFamily::CriticalSine { k: 2 }, SILVER_MEAN, 1e-10).unwrap();
    let map = CircleMapLift::critical_sine(2, tuning.omega).unwrap();
    let est = rotation_number(&map, map.critical_points()[0].c, 1_000_000, 1e-10).unwrap();
    assert!((est.value - SILVER_MEAN).abs() <= 1e-10, "{}", est.value);
}

#[test]
fn rotation_family_tunes_exactly() {
    let tuning = tune_omega(ParametricFamily::Rotation, 0.375, 1e-12).unwrap();
    assert!((tuning.omega - 0.375).abs() <= 1e-12);
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Gauss-map iteration on exact rationals `num / den`.
fn gauss_rational(mut num: u64, mut den: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while num != 0 {
        out.push(den / num);
        (num, den) = (den % num, num);
    }
    out
}

#[test]
fn expansions_of_known_numbers() {
    let cf = continued_fraction(0.375, 10).unwrap();
    assert_eq!(cf.partial_quotients, gauss_rational(3, 8));
    assert_eq!(cf.partial_quotients, vec![2, 1, 2]);
    assert_eq!(cf.convergent(3), (3, 8));
    assert!(cf.terminated);

    let golden = continued_fraction(GOLDEN_MEAN, 40).unwrap();
    assert!(golden.partial_quotients.iter().all(|&a| a == 1));
    assert_eq!(&golden.q[..8], &[1, 1, 2, 3, 5, 8, 13, 21]);

    let silver = continued_fraction(SILVER_MEAN, 40).unwrap();
    assert!(silver.partial_quotients.iter().all(|&a| a == 2));
    assert_eq!(&silver.q[..5], &[1, 2, 5, 12, 29]);
}

fn check_recurrences(cf: &ContinuedFraction, rho: f64) {
    for n in 1..cf.depth() {
        let a = cf.partial_quotients[n];
        assert_eq!(cf.q[n + 1], a * cf.q[n] + cf.q[n - 1]);
        assert_eq!(cf.p[n + 1], a * cf.p[n] + cf.p[n - 1]);
    }
    for n in 1..=cf.depth() {
        let det = cf.p[n] as i128 * cf.q[n - 1] as i128 - cf.p[n - 1] as i128 * cf.q[n] as i128;
        assert_eq!(det.abs(), 1);
    }
    for n in 1..cf.depth() {
        let err = (rho - cf.p[n] as f64 / cf.q[n] as f64).abs();
        assert!(err <= 1.0 / (cf.q[n] as f64 * cf.q[n + 1] as f64) * (1.0 + 1e-9) + 1e-16);
    }
}

proptest! {
    #[test]
    fn convergent_recurrences(rho in 0.001f64..0.999) {
        let cf = continued_fraction(rho, 30).unwrap();
        check_recurrences(&cf, rho);
    }

    #[test]
    fn dyadic_inputs_terminate_exactly(num in 1u64..1024, shift in 1u32..11) {
        let den = 1u64 << shift;
        prop_assume!(num < den);
        let cf = continued_fraction(num as f64 / den as f64, 40).unwrap();
        let g = gcd(num, den);
        prop_assert!(cf.terminated);
        prop_assert_eq!(cf.convergent(cf.depth()), (num / g, den / g));
        prop_assert_eq!(cf.partial_quotients.clone(), gauss_rational(num, den));
    }

    #[test]
    fn small_rationals_appear_as_convergents(num in 1u64..500, den in 2u64..500) {
        prop_assume!(num < den);
        let g = gcd(num, den);
        let cf = continued_fraction(num as f64 / den as f64, 40).unwrap();
        prop_assert!((0..=cf.depth()).any(|n| cf.convergent(n) == (num / g, den / g)));
    }

    #[test]
    fn lift_is_monotone_and_degree_one(x in 0.0f64..1.0, h in 1e-6f64..0.5, omega in 0.0f64..1.0, k in 1u32..4) {
        let map = CircleMapLift::critical_sine(k, omega).unwrap();
        prop_assert!(map.lift(x) <= map.lift(x + h));
        prop_assert!((map.lift(x + 1.0) - map.lift(x) - 1.0).abs() <= 1e-12);
        prop_assert!(map.deriv(x) >= 0.0);
        prop_assert!((map.deriv(x) - sine_deriv(k as f64, x)).abs() <= 1e-12);
    }
}

#![allow(dead_code)]

use std::sync::OnceLock;

use circle_lab_core::map::{CircleMapLift, ParametricFamily};
use circle_lab_core::rotation::{continued_fraction, tune_omega, ContinuedFraction};
use circle_lab_core::GOLDEN_MEAN;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Golden {
    pub map: CircleMapLift,
    pub rotation: CircleMapLift,
    pub cf: ContinuedFraction,
    pub omega: f64,
}

/// The cubic sine map tuned to the golden mean, plus the golden rotation.
pub fn golden() -> &'static Golden {
    static CELL: OnceLock<Golden> = OnceLock::new();
    CELL.get_or_init(|| {
        let tuning = tune_omega(ParametricFamily::CriticalSine { k: 1 }, GOLDEN_MEAN, 1e-14).unwrap();
        Golden {
            map: CircleMapLift::critical_sine(1, tuning.omega).unwrap(),
            rotation: CircleMapLift::rotation(GOLDEN_MEAN),
            cf: continued_fraction(GOLDEN_MEAN, 40).unwrap(),
            omega: tuning.omega,
        }
    })
}

/// Level `n` with `q_n = q`.
pub fn level_of(cf: &ContinuedFraction, q: u64) -> usize {
    cf.q.iter().position(|&v| v == q).expect("q is a return time")
}

pub fn uniform_points(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen::<f64>()).collect()
}

//! Observables on the circle with analytic derivatives, and the trigonometric
//! test set used to check automorphic identities.

use std::f64::consts::TAU;

/// A 1-periodic function with a known derivative.
pub trait Observable: Sync {
    fn value(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
}

impl<T: Observable + ?Sized> Observable for &T {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn deriv(&self, x: f64) -> f64 {
        (**self).deriv(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Constant,
    Cos(u32),
    Sin(u32),
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant => "1".into(),
            TestFunction::Cos(j) => format!("cos(2pi*{j}x)"),
            TestFunction::Sin(j) => format!("sin(2pi*{j}x)"),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }
}

impl Observable for TestFunction {
    #[inline]
    fn value(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Cos(j) => (TAU * j as f64 * x).cos(),
            TestFunction::Sin(j) => (TAU * j as f64 * x).sin(),
        }
    }

    #[inline]
    fn deriv(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Constant => 0.0,
            TestFunction::Cos(j) => -TAU * j as f64 * (TAU * j as f64 * x).sin(),
            TestFunction::Sin(j) => TAU * j as f64 * (TAU * j as f64 * x).cos(),
        }
    }
}

/// `{1, cos 2 pi j x, sin 2 pi j x : 1 <= j <= J}` with recorded sup norms.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSet {
    pub functions: Vec<TestFunction>,
}

impl TestFunctionSet {
    pub const DEFAULT_MODES: u32 = 4;

    pub fn trigonometric(modes: u32) -> Self {
        let mut functions = vec![TestFunction::Constant];
        for j in 1..=modes {
            functions.push(TestFunction::Cos(j));
            functions.push(TestFunction::Sin(j));
        }
        Self { functions }
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.functions.iter().map(|f| f.sup_norm()).collect()
    }
}

impl Default for TestFunctionSet {
    fn default() -> Self {
        Self::trigonometric(Self::DEFAULT_MODES)
    }
}

/// Finite sum `c + Σ (a_j cos 2 pi j x + b_j sin 2 pi j x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    pub constant: f64,
    /// `(j, a_j, b_j)`
    pub terms: Vec<(u32, f64, f64)>,
}

impl TrigPolynomial {
    pub fn sin(j: u32) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(j, 0.0, 1.0)],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }
}

impl Observable for TrigPolynomial {
    fn value(&self, x: f64) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(j, a, b)| {
            let t = TAU * j as f64 * x;
            acc + a * t.cos() + b * t.sin()
        })
    }

    fn deriv(&self, x: f64) -> f64 {
        self.terms.iter().fold(0.0, |acc, &(j, a, b)| {
            let w = TAU * j as f64;
            let t = w * x;
            acc + w * (b * t.cos() - a * t.sin())
        })
    }
}

/// Smooth bump `scale * exp(-1 / (1 - r^2))`, `r = (x - center) / half_width`,
/// supported in `(center - half_width, center + half_width)` (taken mod 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub scale: f64,
}

impl Bump {
    fn offset(&self, x: f64) -> f64 {
        let d = (x - self.center).rem_euclid(1.0);
        if d > 0.5 {
            d - 1.0
        } else {
            d
        }
    }

    /// Rescale so that the derivative at `x` equals `slope`.
    pub fn with_slope_at(mut self, x: f64, slope: f64) -> Self {
        self.scale = 1.0;
        let d = self.deriv(x);
        self.scale = slope / d;
        self
    }
}

impl Observable for Bump {
    fn value(&self, x: f64) -> f64 {
        let r = self.offset(x) / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        self.scale * (-1.0 / (1.0 - r * r)).exp()
    }

    fn deriv(&self, x: f64) -> f64 {
        let r = self.offset(x) / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let g = 1.0 - r * r;
        self.scale * (-1.0 / g).exp() * (-2.0 * r / (g * g)) / self.half_width
    }
}

/// Values (and derivatives, when available) of an observable on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Option<Vec<f64>>,
    pub sup_norm: f64,
    /// Total variation over the circle, summed over monotone segments.
    pub variation: f64,
}

impl SampledFunction {
    /// Sample on `n` equispaced points `i / n`. Extrema between grid points are
    /// located from the derivative so the variation is not clipped by the grid.
    pub fn sample<O: Observable + ?Sized>(obs: &O, n: usize) -> Self {
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| obs.value(x)).collect();
        let derivs: Vec<f64> = grid.iter().map(|&x| obs.deriv(x)).collect();
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let variation = monotone_variation(obs, &grid, &values, &derivs);
        Self {
            grid,
            values,
            derivs: Some(derivs),
            sup_norm,
            variation,
        }
    }

    /// Sample values only; the variation is the grid sum `Σ |v_{i+1} - v_i|`.
    pub fn from_values(grid: Vec<f64>, values: Vec<f64>) -> Self {
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n = values.len();
        let variation = (0..n).map(|i| (values[(i + 1) % n] - values[i]).abs()).sum();
        Self {
            grid,
            values,
            derivs: None,
            sup_norm,
            variation,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Sum of `|value(e_{k+1}) - value(e_k)|` over consecutive local extrema `e_k`,
/// which are bracketed by derivative sign changes on the grid and refined by bisection.
fn monotone_variation<O: Observable + ?Sized>(obs: &O, grid: &[f64], values: &[f64], derivs: &[f64]) -> f64 {
    let n = grid.len();
    if n < 2 {
        return 0.0;
    }
    let step = 1.0 / n as f64;
    let mut extrema = Vec::new();
    for i in 0..n {
        let (d0, d1) = (derivs[i], derivs[(i + 1) % n]);
        if d0 == 0.0 {
            extrema.push(values[i]);
        } else if d0 * d1 < 0.0 {
            let (mut a, mut b) = (grid[i], grid[i] + step);
            let da = d0;
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let dm = obs.deriv(m);
                if dm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (dm > 0.0) == (da > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            extrema.push(obs.value(0.5 * (a + b)));
        }
    }
    if extrema.len() < 2 {
        return 0.0;
    }
    let m = extrema.len();
    (0..m).map(|k| (extrema[(k + 1) % m] - extrema[k]).abs()).sum()
}

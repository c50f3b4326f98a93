//! Locally stationary error processes and nonlinear autoregressions used in
//! the Monte Carlo experiments.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::math::{cos, exp, sin};
use crate::rng::{normal, stream_id, stream_rng};

/// Default number of discarded warm-up steps.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Grid size used to check the TVTAR contraction condition.
const CONTRACTION_GRID: usize = 1024;

/// A coefficient function of rescaled time.
#[derive(Clone, Copy, Debug)]
pub enum Coefficient {
    Constant(f64),
    /// `amplitude · sin(2πt)`.
    Sine { amplitude: f64 },
    Custom(fn(f64) -> f64),
}

impl Coefficient {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Coefficient::Constant(v) => v,
            Coefficient::Sine { amplitude } => amplitude * sin(2.0 * PI * t),
            Coefficient::Custom(f) => f(t),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum ErrorProcessKind {
    /// `ε_i = a1(t) ε_{i−1} + a2(t) ε_{i−2} + η_i`.
    TvAr2 { a1: Coefficient, a2: Coefficient },
    /// `ε_i = a1(t) ε_{i−1} + η_i` when `ε_{i−1} ≥ 0`, otherwise `a2(t) ε_{i−1} + η_i`.
    Setar { a1: Coefficient, a2: Coefficient },
    /// `ε_i = (a1(t) η_{i−1} + a2(t)) ε_{i−1} + η_i`.
    Bilinear { a1: Coefficient, a2: Coefficient },
    /// `ε_i = a(t) [ε_{i−1}]⁺ + b(t) [−ε_{i−1}]⁺ + η_i`.
    Tvtar { a: Coefficient, b: Coefficient },
}

/// Error process with standard Gaussian innovations.
#[derive(Clone, Copy, Debug)]
pub struct ErrorProcessSpec {
    pub kind: ErrorProcessKind,
    pub burn_in: usize,
}

const A1: Coefficient = Coefficient::Constant(0.4);
const A2: Coefficient = Coefficient::Sine { amplitude: 0.4 };

impl ErrorProcessSpec {
    pub fn new(kind: ErrorProcessKind) -> Self {
        ErrorProcessSpec {
            kind,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// Time-varying AR(2) with `a1 ≡ 0.4`, `a2 = 0.4 sin(2πt)`.
    pub fn tvar2() -> Self {
        Self::new(ErrorProcessKind::TvAr2 { a1: A1, a2: A2 })
    }

    pub fn setar() -> Self {
        Self::new(ErrorProcessKind::Setar { a1: A1, a2: A2 })
    }

    pub fn bilinear() -> Self {
        Self::new(ErrorProcessKind::Bilinear { a1: A1, a2: A2 })
    }

    /// The three built-in settings by their labels `a`, `b`, `c`.
    pub fn by_label(label: &str) -> Result<Self> {
        match label {
            "a" | "tvar2" => Ok(Self::tvar2()),
            "b" | "setar" => Ok(Self::setar()),
            "c" | "bilinear" => Ok(Self::bilinear()),
            other => Err(Error::config(format!(
                "unknown error process '{other}' (expected a, b or c)"
            ))),
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let ErrorProcessKind::Tvtar { a, b } = self.kind {
            let worst = (0..CONTRACTION_GRID)
                .map(|k| {
                    let t = k as f64 / (CONTRACTION_GRID - 1) as f64;
                    a.eval(t).abs() + b.eval(t).abs()
                })
                .fold(0.0, f64::max);
            if !(worst < 1.0) {
                return Err(Error::config(format!(
                    "TVTAR coefficients violate sup(|a| + |b|) < 1 (max {worst})"
                )));
            }
        }
        Ok(())
    }
}

/// Error path including the warm-up stretch, which runs at `t = 0`.
pub(crate) fn error_path<R: Rng + ?Sized>(
    spec: &ErrorProcessSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let total = spec.burn_in + n;
    let mut out = Vec::with_capacity(total);
    let (mut e1, mut e2, mut eta_prev) = (0.0f64, 0.0f64, 0.0f64);
    for step in 0..total {
        let t = if step < spec.burn_in {
            0.0
        } else {
            (step - spec.burn_in + 1) as f64 / n as f64
        };
        let eta = normal(rng);
        let e = match spec.kind {
            ErrorProcessKind::TvAr2 { a1, a2 } => a1.eval(t) * e1 + a2.eval(t) * e2 + eta,
            ErrorProcessKind::Setar { a1, a2 } => {
                let a = if e1 >= 0.0 { a1.eval(t) } else { a2.eval(t) };
                a * e1 + eta
            }
            ErrorProcessKind::Bilinear { a1, a2 } => {
                (a1.eval(t) * eta_prev + a2.eval(t)) * e1 + eta
            }
            ErrorProcessKind::Tvtar { a, b } => {
                a.eval(t) * e1.max(0.0) + b.eval(t) * (-e1).max(0.0) + eta
            }
        };
        if !e.is_finite() {
            return Err(Error::NonFiniteStep { step });
        }
        out.push(e);
        e2 = e1;
        e1 = e;
        eta_prev = eta;
    }
    Ok(out)
}

/// `n` values of the error process after discarding `spec.burn_in` warm-up
/// steps. Step `i` of the returned stretch uses rescaled time `i/n`.
pub fn gen_error_process(spec: &ErrorProcessSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::config("series length must be at least 1"));
    }
    let mut rng = stream_rng(seed, stream_id("error", 0));
    let mut path = error_path(spec, n, &mut rng)?;
    Ok(path.split_off(spec.burn_in))
}

/// Regression function and volatility of a simulated nonlinear autoregression.
///
/// `Model1 { delta }` is `5t + 4cos(2πtx) + δ sin(2πtx)`; `δ = 0` gives the
/// null model of the exact-form test and `δ > 0` its alternatives.
#[derive(Clone, Copy, Debug)]
pub enum RegressionModelSpec {
    Model1 { delta: f64 },
    Model2 { delta: f64 },
    Model3 { delta: f64 },
    Custom {
        m: fn(f64, f64) -> f64,
        sigma: fn(f64, f64) -> f64,
    },
}

impl RegressionModelSpec {
    pub fn by_name(name: &str, delta: f64) -> Result<Self> {
        let model = match name {
            "model1" => RegressionModelSpec::Model1 { delta },
            "model2" => RegressionModelSpec::Model2 { delta },
            "model3" => RegressionModelSpec::Model3 { delta },
            other => {
                return Err(Error::config(format!(
                    "unknown model '{other}' (expected model1, model2 or model3)"
                )))
            }
        };
        model.validate()?;
        Ok(model)
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegressionModelSpec::Model1 { .. } => "model1",
            RegressionModelSpec::Model2 { .. } => "model2",
            RegressionModelSpec::Model3 { .. } => "model3",
            RegressionModelSpec::Custom { .. } => "custom",
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            RegressionModelSpec::Model1 { delta }
            | RegressionModelSpec::Model2 { delta }
            | RegressionModelSpec::Model3 { delta } => delta,
            RegressionModelSpec::Custom { .. } => 0.0,
        }
    }

    #[inline]
    pub fn m(&self, t: f64, x: f64) -> f64 {
        match *self {
            RegressionModelSpec::Model1 { delta } => {
                let arg = 2.0 * PI * t * x;
                5.0 * t + 4.0 * cos(arg) + delta * sin(arg)
            }
            RegressionModelSpec::Model2 { delta } => {
                (delta * sin(2.0 * PI * t) + 1.0) * exp(-0.5 * x * x)
            }
            RegressionModelSpec::Model3 { delta } => {
                4.0 * t * (delta * cos(2.0 * PI * t * x) - 0.5 * exp(-0.5 * x * x))
            }
            RegressionModelSpec::Custom { m, .. } => m(t, x),
        }
    }

    #[inline]
    pub fn sigma(&self, t: f64, x: f64) -> f64 {
        match *self {
            RegressionModelSpec::Model1 { .. } => {
                1.5 * exp(-0.5 * x * x) * (2.0 + sin(2.0 * PI * t))
            }
            RegressionModelSpec::Model2 { .. } => {
                // 1.5 eˣ / (1 + eˣ), written to stay finite for large |x|
                let logistic = 1.0 / (1.0 + exp(-x));
                1.5 * logistic * (0.5 * cos(2.0 * PI * t * x) + 1.0)
            }
            RegressionModelSpec::Model3 { .. } => {
                if x.abs() <= 1.0 {
                    0.7 * (1.0 + x * x)
                } else if t < 0.5 {
                    1.4
                } else {
                    2.0
                }
            }
            RegressionModelSpec::Custom { sigma, .. } => sigma(t, x),
        }
    }

    /// Checks `σ ≥ 0` on a 128 × 128 grid over `[0, 1] × [−10, 10]`.
    pub fn validate(&self) -> Result<()> {
        if !self.delta().is_finite() || self.delta() < 0.0 {
            return Err(Error::config(format!(
                "delta must be a finite nonnegative number, got {}",
                self.delta()
            )));
        }
        for i in 0..128 {
            let t = i as f64 / 127.0;
            for j in 0..128 {
                let x = -10.0 + 20.0 * j as f64 / 127.0;
                let s = self.sigma(t, x);
                if !(s >= 0.0) {
                    return Err(Error::config(format!(
                        "sigma({t}, {x}) = {s} is negative or undefined"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `X_i = m(i/n, X_{i−1}) + σ(i/n, X_{i−1}) ε_i` for `i = 1..n`, started from
/// a zero state, with `n = errors.len()`.
pub fn gen_regression_series(model: &RegressionModelSpec, errors: &[f64]) -> Result<Vec<f64>> {
    regression_path(model, errors, 0)
}

/// Runs the recursion over `errors`, treating the first `burn_in` steps as
/// warm-up at `t = 0` and dropping them from the output.
pub fn regression_path(
    model: &RegressionModelSpec,
    errors: &[f64],
    burn_in: usize,
) -> Result<Vec<f64>> {
    if errors.len() <= burn_in {
        return Err(Error::config("error stream shorter than the burn-in"));
    }
    let n = errors.len() - burn_in;
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for (step, &e) in errors.iter().enumerate() {
        let t = if step < burn_in {
            0.0
        } else {
            (step - burn_in + 1) as f64 / n as f64
        };
        let x = model.m(t, prev) + model.sigma(t, prev) * e;
        if !x.is_finite() {
            return Err(Error::NonFiniteStep { step });
        }
        if step >= burn_in {
            out.push(x);
        }
        prev = x;
    }
    Ok(out)
}

/// Autoregressive series of length `n` driven by `error`, with the error
/// process's burn-in reused as warm-up for the regression recursion.
pub fn simulate_series(
    model: &RegressionModelSpec,
    error: &ErrorProcessSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::config("series length must be at least 1"));
    }
    model.validate()?;
    let mut rng = stream_rng(seed, stream_id("error", 0));
    let path = error_path(error, n, &mut rng)?;
    regression_path(model, &path, error.burn_in)
}

/// Exogenous-covariate panel. Column 0 holds `Y`, columns `1..=r` the
/// covariates `X_1..X_r`, each an independent copy of `covariate`:
///
/// `Y_i = Σ_j m_j(i/n, X_{j,i}) + (Σ_j σ_j(i/n, X_{j,i})) ε_i`.
pub fn gen_case2_panel(
    models: &[RegressionModelSpec],
    covariate: &ErrorProcessSpec,
    error: &ErrorProcessSpec,
    n: usize,
    seed: u64,
) -> Result<Mat> {
    if models.is_empty() {
        return Err(Error::config("panel needs at least one regression function"));
    }
    if n == 0 {
        return Err(Error::config("series length must be at least 1"));
    }
    for m in models {
        m.validate()?;
    }
    let r = models.len();
    let mut xs = Vec::with_capacity(r);
    for j in 0..r {
        let mut rng = stream_rng(seed, stream_id("covariate", j as u64));
        let mut path = error_path(covariate, n, &mut rng)?;
        xs.push(path.split_off(covariate.burn_in));
    }
    let mut rng = stream_rng(seed, stream_id("error", 0));
    let mut eps = error_path(error, n, &mut rng)?;
    let eps = eps.split_off(error.burn_in);

    let mut out = Mat::zeros(n, r + 1);
    let mut row = vec![0.0; r + 1];
    for i in 0..n {
        let t = (i + 1) as f64 / n as f64;
        let (mut mean, mut scale) = (0.0, 0.0);
        for (j, model) in models.iter().enumerate() {
            let x = xs[j][i];
            mean += model.m(t, x);
            scale += model.sigma(t, x);
            row[j + 1] = x;
        }
        row[0] = mean + scale * eps[i];
        if !row[0].is_finite() {
            return Err(Error::NonFiniteStep { step: i });
        }
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

//! Sieve design matrix, least-squares fit, and the fitted surfaces `m̂_j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{SieveBasis, SieveSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, Cholesky, Mat};
use crate::math::sqrt;

/// Observed data.
///
/// In the autoregressive case the `j`-th regressor at time `i` is the lagged
/// response `Y_{i−j}`; in the panel case it is the exogenous `X_{j,i}`.
/// `time_scale` is the `n` in `t_i = i/n`; it equals the series length unless
/// the data were cut down with [`Observations::prefix`].
#[derive(Clone, Debug, PartialEq)]
pub struct Observations {
    y: Vec<f64>,
    covariates: Vec<Vec<f64>>,
    time_scale: usize,
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFiniteData { row: i + 1 }),
        None => Ok(()),
    }
}

impl Observations {
    pub fn lagged(y: Vec<f64>) -> Result<Self> {
        check_finite(&y)?;
        let n = y.len();
        Ok(Observations {
            y,
            covariates: Vec::new(),
            time_scale: n,
        })
    }

    pub fn panel(y: Vec<f64>, covariates: Vec<Vec<f64>>) -> Result<Self> {
        check_finite(&y)?;
        if covariates.is_empty() {
            return Err(Error::config("panel data needs at least one covariate"));
        }
        for (j, x) in covariates.iter().enumerate() {
            if x.len() != y.len() {
                return Err(Error::Dimension(format!(
                    "covariate {} has {} rows, response has {}",
                    j + 1,
                    x.len(),
                    y.len()
                )));
            }
            check_finite(x)?;
        }
        let n = y.len();
        Ok(Observations {
            y,
            covariates,
            time_scale: n,
        })
    }

    /// Panel from an `n × (r + 1)` matrix with columns `(Y, X_1, …, X_r)`.
    pub fn from_panel_matrix(m: &Mat) -> Result<Self> {
        if m.cols() < 2 {
            return Err(Error::Dimension("panel matrix needs at least two columns".into()));
        }
        let xs = (1..m.cols()).map(|j| m.column(j)).collect();
        Observations::panel(m.column(0), xs)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn is_lagged(&self) -> bool {
        self.covariates.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn covariates(&self) -> &[Vec<f64>] {
        &self.covariates
    }

    pub fn time_scale(&self) -> usize {
        self.time_scale
    }

    /// First `len` observations, keeping the original time scale.
    pub fn prefix(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Observations {
            y: self.y[..len].to_vec(),
            covariates: self.covariates.iter().map(|x| x[..len].to_vec()).collect(),
            time_scale: self.time_scale,
        }
    }

    /// Rescaled time `i/n` of 1-based index `i`.
    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.time_scale as f64
    }

    /// Regressor `X_{j,i}` for 1-based `j` and `i`.
    #[inline]
    pub fn regressor(&self, j: usize, i: usize) -> f64 {
        if self.covariates.is_empty() {
            self.y[i - j - 1]
        } else {
            self.covariates[j - 1][i - 1]
        }
    }

    /// Sample standard deviation of the regressors, the default mapping scale.
    pub fn covariate_sd(&self) -> f64 {
        let pooled: Vec<f64> = if self.covariates.is_empty() {
            self.y.clone()
        } else {
            self.covariates.iter().flatten().copied().collect()
        };
        sample_sd(&pooled)
    }

    fn check_against(&self, spec: &SieveSpec) -> Result<()> {
        if !self.is_lagged() && self.covariates.len() != spec.r {
            return Err(Error::Dimension(format!(
                "spec has r = {} but the panel carries {} covariates",
                spec.r,
                self.covariates.len()
            )));
        }
        if self.len() <= spec.r {
            return Err(Error::UnderDetermined {
                rows: 0,
                cols: spec.p(),
            });
        }
        Ok(())
    }
}

pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    sqrt(v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0))
}

/// Bijection between flat coefficient slots and `(j, ℓ1, ℓ2)`:
/// `k = (j − 1)·c·d + (ℓ1 − 1)·d + ℓ2`, all 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexMap {
    pub r: usize,
    pub c: usize,
    pub d: usize,
}

impl IndexMap {
    pub fn new(r: usize, c: usize, d: usize) -> Self {
        IndexMap { r, c, d }
    }

    pub fn p(&self) -> usize {
        self.r * self.c * self.d
    }

    pub fn index(&self, j: usize, l1: usize, l2: usize) -> usize {
        debug_assert!((1..=self.r).contains(&j));
        debug_assert!((1..=self.c).contains(&l1));
        debug_assert!((1..=self.d).contains(&l2));
        (j - 1) * self.c * self.d + (l1 - 1) * self.d + l2
    }

    pub fn components(&self, k: usize) -> (usize, usize, usize) {
        debug_assert!((1..=self.p()).contains(&k));
        let z = k - 1;
        let cd = self.c * self.d;
        (z / cd + 1, (z % cd) / self.d + 1, z % self.d + 1)
    }

    /// Zero-based range of the coefficients belonging to function `j`.
    pub fn block(&self, j: usize) -> core::ops::Range<usize> {
        let cd = self.c * self.d;
        (j - 1) * cd..j * cd
    }

    /// Whether coefficient `(j, ℓ1, ℓ2)` is estimated. With several
    /// functions the columns `a_{ℓ1}(t) ϕ_1(x)` repeat across `j` whenever the
    /// space basis contains the constants, so every `m_j` with `j ≥ 2` has its
    /// `ϕ_1` coefficients fixed at zero.
    pub fn is_free(&self, j: usize, l2: usize) -> bool {
        self.r == 1 || j == 1 || l2 > 1
    }

    /// Zero-based indices of the estimated coefficients, ascending.
    pub fn free_indices(&self) -> Vec<usize> {
        (1..=self.p())
            .filter(|&k| {
                let (j, _, l2) = self.components(k);
                self.is_free(j, l2)
            })
            .map(|k| k - 1)
            .collect()
    }
}

/// Design matrix with one row per response index `i = r + 1, …, n`.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    pub w: Mat,
    basis: SieveBasis,
}

impl DesignMatrix {
    pub fn basis(&self) -> &SieveBasis {
        &self.basis
    }

    pub fn rows(&self) -> usize {
        self.w.rows()
    }
}

/// Builds `W` with `W_{ik} = φ_{ℓ1}(t_{i+r}) ϕ_{ℓ2}(X_{j,i+r})`. Wide designs
/// are allowed here; fitting one fails with [`Error::UnderDetermined`].
pub fn build_design(obs: &Observations, spec: &SieveSpec) -> Result<DesignMatrix> {
    design_with_basis(obs, SieveBasis::new(*spec)?)
}

pub(crate) fn design_with_basis(obs: &Observations, basis: SieveBasis) -> Result<DesignMatrix> {
    let spec = *basis.spec();
    obs.check_against(&spec)?;
    let (r, c, d) = (spec.r, spec.c, spec.d);
    let rows = obs.len() - r;
    let mut w = Mat::zeros(rows, spec.p());
    let mut a = vec![0.0; c];
    let mut phi = vec![0.0; d];
    for row in 0..rows {
        let i = row + r + 1;
        basis.time_values(obs.time(i), &mut a)?;
        let out = w.row_mut(row);
        for j in 1..=r {
            basis.space_values(obs.regressor(j, i), &mut phi)?;
            let base = (j - 1) * c * d;
            for (l1, &al) in a.iter().enumerate() {
                for (l2, &ph) in phi.iter().enumerate() {
                    out[base + l1 * d + l2] = al * ph;
                }
            }
        }
    }
    Ok(DesignMatrix { w, basis })
}

/// Least-squares fit and everything inference needs from it.
#[derive(Clone, Debug)]
pub struct FitResult {
    basis: SieveBasis,
    /// Number of observations, the `n` in `Π̂ = WᵀW / n`.
    pub n: usize,
    pub beta: Vec<f64>,
    /// `Π̂ = WᵀW / n`.
    pub pi_hat: Mat,
    /// `Π̂⁻¹` on the estimated coefficients, zero on any fixed ones.
    pub pi_inv: Mat,
    /// Residuals for response indices `r + 1, …, n`.
    pub residuals: Vec<f64>,
    /// Ratio of extreme singular values of `W`.
    pub condition: f64,
}

/// OLS via Householder QR, with `n` taken as `rows(W) + r`.
pub fn ols_fit(design: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    let r = design.basis.spec().r;
    fit_with_n(design, y, design.rows() + r)
}

pub(crate) fn fit_with_n(design: &DesignMatrix, y: &[f64], n: usize) -> Result<FitResult> {
    if design.rows() < design.w.cols() {
        return Err(Error::UnderDetermined {
            rows: design.rows(),
            cols: design.w.cols(),
        });
    }
    if y.len() != design.rows() {
        return Err(Error::Dimension(format!(
            "design has {} rows but the response has {}",
            design.rows(),
            y.len()
        )));
    }
    check_finite(y)?;
    let p = design.w.cols();
    let free = design.basis.spec().index_map().free_indices();
    let (ls, pi_inv) = if free.len() == p {
        let ls = least_squares(&design.w, y)?;
        let pi_inv = invert_gram(&design.w, n, ls.condition)?;
        (ls, pi_inv)
    } else {
        let w = Mat::from_fn(design.rows(), free.len(), |i, q| design.w[(i, free[q])]);
        let mut ls = least_squares(&w, y)?;
        let inner = invert_gram(&w, n, ls.condition)?;
        let mut beta = vec![0.0; p];
        let mut pi_inv = Mat::zeros(p, p);
        for (a, &ka) in free.iter().enumerate() {
            beta[ka] = ls.beta[a];
            for (b, &kb) in free.iter().enumerate() {
                pi_inv[(ka, kb)] = inner[(a, b)];
            }
        }
        ls.beta = beta;
        (ls, pi_inv)
    };
    Ok(FitResult {
        basis: design.basis.clone(),
        n,
        beta: ls.beta,
        pi_hat: design.w.gram(n as f64),
        pi_inv,
        residuals: ls.residuals,
        condition: ls.condition,
    })
}

/// `(WᵀW / n)⁻¹`. On the fixed coordinates of a multi-function fit the
/// returned matrix is zero, making it the inverse on the estimated subspace.
fn invert_gram(w: &Mat, n: usize, condition: f64) -> Result<Mat> {
    let g = w.gram(n as f64);
    Ok(Cholesky::new(&g)
        .map_err(|_| Error::SingularDesign {
            rank: 0,
            cols: g.cols(),
            condition,
        })?
        .inverse())
}

/// Builds the design for `obs` and fits it.
pub fn fit(obs: &Observations, spec: &SieveSpec) -> Result<FitResult> {
    let design = build_design(obs, spec)?;
    fit_with_n(&design, &obs.y()[spec.r..], obs.len())
}

impl FitResult {
    pub fn basis(&self) -> &SieveBasis {
        &self.basis
    }

    pub fn spec(&self) -> &SieveSpec {
        self.basis.spec()
    }

    pub fn index_map(&self) -> IndexMap {
        self.spec().index_map()
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn residual_sd(&self) -> f64 {
        let k = self.residuals.len().max(1) as f64;
        sqrt(self.residuals.iter().map(|e| e * e).sum::<f64>() / k)
    }

    /// Coefficients of `m̂_j` (length `c·d`).
    pub fn block(&self, j: usize) -> &[f64] {
        &self.beta[self.index_map().block(j)]
    }

    /// `m̂_j` at a precomputed tensor vector `b(t, x)`.
    #[inline]
    pub fn predict_tensor(&self, j: usize, b: &[f64]) -> f64 {
        dot(self.block(j), b)
    }

    /// One-step prediction `Σ_j m̂_j(t_i, X_{j,i})` for 1-based index `i`.
    pub fn forecast(&self, obs: &Observations, i: usize) -> Result<f64> {
        let t = obs.time(i);
        let mut total = 0.0;
        for j in 1..=self.spec().r {
            total += predict_m(self, j, t, obs.regressor(j, i))?;
        }
        Ok(total)
    }
}

/// `m̂_j(t, x) = Σ β̂_{k(j,ℓ1,ℓ2)} φ_{ℓ1}(t) ϕ_{ℓ2}(x)`.
pub fn predict_m(fit: &FitResult, j: usize, t: f64, x: f64) -> Result<f64> {
    if j == 0 || j > fit.spec().r {
        return Err(Error::IndexOutOfRange {
            index: j,
            capacity: fit.spec().r,
        });
    }
    let b = fit.basis.tensor(t, x)?;
    Ok(fit.predict_tensor(j, &b))
}

/// Space-only regressor `w_i` of length `r·d`, slot `(j − 1)·d + ℓ2` holding
/// `ϕ_{ℓ2}(X_{j,i})`, for 1-based response index `i > r`.
pub fn regressor_vector(obs: &Observations, basis: &SieveBasis, i: usize) -> Result<Vec<f64>> {
    let spec = basis.spec();
    if i <= spec.r || i > obs.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            capacity: obs.len(),
        });
    }
    let d = spec.d;
    let mut out = vec![0.0; spec.r * d];
    for j in 1..=spec.r {
        basis.space_values(obs.regressor(j, i), &mut out[(j - 1) * d..j * d])?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, Mapping};
    use core::f64::consts::SQRT_2;

    fn spec(c: usize, d: usize, r: usize) -> SieveSpec {
        SieveSpec {
            time_family: BasisFamily::Fourier,
            space_family: BasisFamily::Fourier,
            mapping: Mapping::algebraic(1.0).unwrap(),
            c,
            d,
            r,
        }
    }

    fn design_from(rows: &[&[f64]]) -> DesignMatrix {
        let cols = rows[0].len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DesignMatrix {
            w: Mat::from_rows(rows.len(), cols, data).unwrap(),
            basis: SieveBasis::new(spec(1, cols, 1)).unwrap(),
        }
    }

    #[test]
    fn index_map_is_a_bijection() {
        let m = IndexMap::new(3, 4, 5);
        let mut seen = vec![false; m.p() + 1];
        for j in 1..=3 {
            for l1 in 1..=4 {
                for l2 in 1..=5 {
                    let k = m.index(j, l1, l2);
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(m.components(k), (j, l1, l2));
                }
            }
        }
        assert!(seen[1..].iter().all(|&s| s));
    }

    #[test]
    fn constant_design_is_all_ones() {
        let obs = Observations::lagged(vec![0.1, -0.3, 2.0, 1.5, 0.7]).unwrap();
        let dm = build_design(&obs, &spec(1, 1, 1)).unwrap();
        assert_eq!(dm.w.rows(), 4);
        assert!(dm.w.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn toy_design_matches_hand_evaluation() {
        let y = [0.5, -1.0, 2.0, 0.25];
        let obs = Observations::lagged(y.to_vec()).unwrap();
        let dm = build_design(&obs, &spec(2, 2, 1)).unwrap();
        assert_eq!((dm.w.rows(), dm.w.cols()), (3, 4));
        let map = Mapping::algebraic(1.0).unwrap();
        for row in 0..3 {
            let i = row + 2;
            let t = i as f64 / 4.0;
            let yv = map.to_unit(y[i - 2]).unwrap();
            let a = [1.0, SQRT_2 * (2.0 * core::f64::consts::PI * t).cos()];
            let phi = [1.0, SQRT_2 * (2.0 * core::f64::consts::PI * yv).cos()];
            for l1 in 0..2 {
                for l2 in 0..2 {
                    let expect = a[l1] * phi[l2];
                    assert!((dm.w[(row, l1 * 2 + l2)] - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn too_few_rows_is_under_determined() {
        let obs = Observations::lagged(vec![0.0; 10]).unwrap();
        let err = fit(&obs, &spec(6, 10, 1)).unwrap_err();
        assert_eq!(err, Error::UnderDetermined { rows: 9, cols: 60 });
    }

    #[test]
    fn non_finite_row_is_reported() {
        let err = Observations::lagged(vec![0.0, 1.0, f64::NAN]).unwrap_err();
        assert_eq!(err, Error::NonFiniteData { row: 3 });
    }

    #[test]
    fn sample_mean_and_exact_fit() {
        let dm = design_from(&[&[1.0], &[1.0], &[1.0]]);
        let f = ols_fit(&dm, &[1.0, 2.0, 3.0]).unwrap();
        assert!((f.beta[0] - 2.0).abs() < 1e-14);
        let dm = design_from(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let f = ols_fit(&dm, &[1.0, 1.0, 2.0]).unwrap();
        assert!((f.beta[0] - 1.0).abs() < 1e-14 && (f.beta[1] - 1.0).abs() < 1e-14);
        assert!(f.residuals.iter().all(|e| e.abs() < 1e-14));
    }

    #[test]
    fn prediction_with_single_coefficient() {
        let obs = Observations::lagged((0..20).map(|i| (i as f64).sin()).collect()).unwrap();
        let mut f = fit(&obs, &spec(2, 2, 1)).unwrap();
        f.beta = vec![2.0, 0.0, 0.0, 0.0];
        for &(t, x) in &[(0.0, -3.0), (0.4, 0.2), (1.0, 100.0)] {
            assert!((predict_m(&f, 1, t, x).unwrap() - 2.0).abs() < 1e-15);
        }
        f.beta = vec![0.0; 4];
        assert_eq!(predict_m(&f, 1, 0.3, 1.0).unwrap(), 0.0);
        assert!(predict_m(&f, 2, 0.3, 1.0).is_err());
    }

    #[test]
    fn regressor_vector_matches_space_values() {
        let obs = Observations::lagged(vec![0.3, -0.2, 1.1, 0.9, -2.0]).unwrap();
        let basis = SieveBasis::new(spec(1, 1, 2)).unwrap();
        assert_eq!(regressor_vector(&obs, &basis, 4).unwrap(), vec![1.0, 1.0]);
        let basis = SieveBasis::new(spec(2, 3, 1)).unwrap();
        let w = regressor_vector(&obs, &basis, 4).unwrap();
        let mut phi = vec![0.0; 3];
        basis.space_values(1.1, &mut phi).unwrap();
        assert_eq!(w, phi);
        assert!(regressor_vector(&obs, &basis, 1).is_err());
    }

    #[test]
    fn prefix_keeps_time_scale() {
        let obs = Observations::lagged(vec![1.0; 10]).unwrap();
        let head = obs.prefix(6);
        assert_eq!(head.len(), 6);
        assert_eq!(head.time(6), 0.6);
    }

    #[test]
    fn panel_regressors_are_contemporaneous() {
        let obs =
            Observations::panel(vec![1.0, 2.0, 3.0], vec![vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]])
                .unwrap();
        assert_eq!(obs.regressor(1, 2), 5.0);
        assert_eq!(obs.regressor(2, 3), 9.0);
        assert!(Observations::panel(vec![1.0], vec![vec![1.0, 2.0]]).is_err());
    }

    fn random_design(rows: usize, cols: usize, seed: u64) -> (DesignMatrix, Vec<f64>) {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let mut data = vec![0.0; rows * cols];
        crate::rng::fill_normal(&mut rng, &mut data);
        let mut y = vec![0.0; rows];
        crate::rng::fill_normal(&mut rng, &mut y);
        let w = Mat::from_rows(rows, cols, data).unwrap();
        let basis = SieveBasis::new(spec(1, cols, 1)).unwrap();
        (DesignMatrix { w, basis }, y)
    }

    fn tvar2_fit(n: usize, c: usize, d: usize, seed: u64) -> (Observations, FitResult) {
        let e = crate::simulate::gen_error_process(&crate::simulate::ErrorProcessSpec::tvar2(), n, seed)
            .unwrap();
        let obs = Observations::lagged(e).unwrap();
        let f = fit(&obs, &spec(c, d, 1)).unwrap();
        (obs, f)
    }

    #[test]
    fn normal_equation_oracle() {
        let (dm, y) = random_design(12, 4, 11);
        let f = ols_fit(&dm, &y).unwrap();
        let w = nalgebra::DMatrix::from_row_slice(12, 4, dm.w.as_slice());
        let yv = nalgebra::DVector::from_column_slice(&y);
        let wtw = w.transpose() * &w;
        let oracle = wtw.try_inverse().unwrap() * w.transpose() * yv;
        for (b, o) in f.beta.iter().zip(oracle.iter()) {
            assert!((b - o).abs() <= 1e-8 * o.abs().max(1.0), "{b} vs {o}");
        }
    }

    #[test]
    fn refitting_fitted_values_is_idempotent() {
        let (obs, f) = tvar2_fit(400, 3, 4, 2);
        let dm = build_design(&obs, f.spec()).unwrap();
        let fitted = dm.w.matvec(&f.beta);
        let again = ols_fit(&dm, &fitted).unwrap();
        for (a, b) in again.beta.iter().zip(&f.beta) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_the_design() {
        let (obs, f) = tvar2_fit(600, 4, 5, 3);
        let dm = build_design(&obs, f.spec()).unwrap();
        let wte = dm.w.tr_matvec(&f.residuals);
        let y_inf = obs.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = wte.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst / (obs.len() as f64 * y_inf) <= 1e-10, "{worst}");
    }

    #[test]
    fn pi_hat_is_symmetric_psd() {
        let (_, f) = tvar2_fit(300, 3, 6, 4);
        assert!(f.pi_hat.is_symmetric(0.0));
        let ev = crate::linalg::symmetric_eigenvalues(&f.pi_hat);
        let norm = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(ev.iter().all(|&v| v >= -1e-10 * norm));
        let prod = f.pi_hat.matmul(&f.pi_inv);
        assert!(prod.max_abs_diff(&Mat::identity(f.p())) < 1e-9);
    }

    #[test]
    fn design_rows_are_tensor_products_of_factors() {
        let (obs, f) = tvar2_fit(250, 3, 4, 5);
        let basis = f.basis();
        let dm = build_design(&obs, f.spec()).unwrap();
        let map = f.index_map();
        let mut rng = crate::rng::stream_rng(9, 0);
        for _ in 0..100 {
            let i = rand::Rng::random_range(&mut rng, 2..=obs.len());
            let w = regressor_vector(&obs, basis, i).unwrap();
            let mut a = vec![0.0; 3];
            basis.time_values(obs.time(i), &mut a).unwrap();
            let row = dm.w.row(i - 2);
            for l1 in 1..=3 {
                for l2 in 1..=4 {
                    let k = map.index(1, l1, l2) - 1;
                    assert!((row[k] - a[l1 - 1] * w[l2 - 1]).abs() < 1e-14);
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn column_permutation_is_equivariant(seed in 0u64..1000, shift in 1usize..5) {
            let (dm, y) = random_design(20, 5, seed);
            let f = ols_fit(&dm, &y).unwrap();
            let perm: Vec<usize> = (0..5).map(|k| (k + shift) % 5).collect();
            let w = Mat::from_fn(20, 5, |i, k| dm.w[(i, perm[k])]);
            let permuted = DesignMatrix { w, basis: dm.basis.clone() };
            let g = ols_fit(&permuted, &y).unwrap();
            let mut unpermuted = vec![0.0; 5];
            for (k, &src) in perm.iter().enumerate() {
                unpermuted[src] = g.beta[k];
            }
            let a = dm.w.matvec(&f.beta);
            let b = dm.w.matvec(&unpermuted);
            for (u, v) in a.iter().zip(&b) {
                proptest::prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn multi_function_fit_fixes_repeated_columns() {
        let e = crate::simulate::gen_error_process(&crate::simulate::ErrorProcessSpec::tvar2(), 400, 8)
            .unwrap();
        let obs = Observations::lagged(e).unwrap();
        let f = fit(&obs, &spec(3, 4, 2)).unwrap();
        let map = f.index_map();
        assert_eq!(map.free_indices().len(), 24 - 3);
        for l1 in 1..=3 {
            let k = map.index(2, l1, 1) - 1;
            assert_eq!(f.beta[k], 0.0);
            assert!(f.pi_inv.row(k).iter().all(|&v| v == 0.0));
        }
        // Π̂ Π̂⁻¹ is the identity on the estimated coordinates
        let prod = f.pi_hat.matmul(&f.pi_inv);
        for &a in &map.free_indices() {
            for &b in &map.free_indices() {
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((prod[(a, b)] - target).abs() < 1e-8);
            }
        }
        assert_eq!(IndexMap::new(1, 3, 4).free_indices().len(), 12);
    }
}

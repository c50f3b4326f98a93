use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::band::{for_each_chunk, scr, GridEvaluator, ScrResult};
use super::multiplier::Multiplier;
use super::{order_statistic, sort_draws, upper_p_value, BootstrapConfig};
use crate::basis::{outer, BasisFamily, SieveBasis, SieveSpec};
use crate::error::{Error, Result};
use crate::estimate::{FitResult, Observations};
use crate::linalg::{dot, least_squares, svd, Mat};
use crate::quadrature::GaussLegendre;

/// Snap tolerance for Gram matrices that are the identity up to quadrature error.
const IDENTITY_SNAP: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TestKind {
    ExactForm,
    ExactFormJoint,
    Stationarity,
    Separability,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    /// Bootstrap critical value at `alpha`.
    pub critical_value: f64,
    pub null_draws_count: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub reject_at_alpha: bool,
}

/// Quadrature rule on `[0, 1]` suited to a family. Wavelet tables are only
/// piecewise smooth, so they get a composite rule.
fn unit_rule(family: BasisFamily) -> GaussLegendre {
    match family {
        BasisFamily::Daubechies { .. } => GaussLegendre::composite(128, 4),
        _ => GaussLegendre::new(64),
    }
}

fn gram(values: &[Vec<f64>], weights: &[f64], k: usize) -> Mat {
    let mut g = Mat::zeros(k, k);
    for (v, &w) in values.iter().zip(weights) {
        for a in 0..k {
            for b in 0..k {
                g[(a, b)] += w * v[a] * v[b];
            }
        }
    }
    g
}

fn snap(mut g: Mat) -> Mat {
    if g.max_abs_diff(&Mat::identity(g.rows())) < IDENTITY_SNAP {
        g = Mat::identity(g.rows());
    }
    g
}

/// `c·d × c·d` Gram matrix of `a(t) ⊗ ϕ(ỹ)` over `[0, 1]²`.
fn tensor_gram(basis: &SieveBasis) -> Mat {
    let spec = basis.spec();
    let (c, d) = (spec.c, spec.d);
    let rt = unit_rule(spec.time_family);
    let ry = unit_rule(spec.space_family);
    let at: Vec<Vec<f64>> = rt.nodes.iter().map(|&t| basis.time().values(t)).collect();
    let py: Vec<Vec<f64>> = ry.nodes.iter().map(|&y| basis.space().values(y)).collect();
    let gt = snap(gram(&at, &rt.weights, c));
    let gy = snap(gram(&py, &ry.weights, d));
    // the tensor rule factorizes into the Kronecker product of the 1-D Gram matrices
    Mat::from_fn(c * d, c * d, |p, q| {
        gt[(p / d, q / d)] * gy[(p % d, q % d)]
    })
}

/// `B = ∫∫ b̃ b̃ᵀ dt dỹ` for the full coefficient vector, block diagonal in `j`.
pub fn compute_b_matrix(spec: &SieveSpec) -> Result<Mat> {
    let basis = SieveBasis::new(*spec)?;
    let blk = tensor_gram(&basis);
    let cd = spec.c * spec.d;
    let mut b = Mat::zeros(spec.p(), spec.p());
    for j in 0..spec.r {
        for p in 0..cd {
            for q in 0..cd {
                b[(j * cd + p, j * cd + q)] = blk[(p, q)];
            }
        }
    }
    Ok(b)
}

/// `n ∫∫ (m̂_j − m0)²(t, y⁻¹(ỹ)) dt dỹ`.
fn l2_statistic(fit: &FitResult, j: usize, m0: &dyn Fn(f64, f64) -> f64) -> Result<f64> {
    let basis = fit.basis();
    let spec = basis.spec();
    let rt = unit_rule(spec.time_family);
    let ry = unit_rule(spec.space_family);
    let beta = fit.block(j);
    let (c, d) = (spec.c, spec.d);
    // β reshaped as c × d, contracted with ϕ(ỹ) for every space node
    let mut inner = Vec::with_capacity(ry.len());
    for &y in &ry.nodes {
        let phi = basis.space().values(y);
        let x = spec.mapping.from_unit(y)?;
        let coeff: Vec<f64> = (0..c).map(|l1| dot(&beta[l1 * d..(l1 + 1) * d], &phi)).collect();
        inner.push((x, coeff));
    }
    let mut total = 0.0;
    for (&t, &wt) in rt.nodes.iter().zip(&rt.weights) {
        let a = basis.time().values(t);
        let mut acc = 0.0;
        for ((x, coeff), &wy) in inner.iter().zip(&ry.weights) {
            let diff = dot(&a, coeff) - m0(t, *x);
            acc += wy * diff * diff;
        }
        total += wt * acc;
    }
    if !total.is_finite() {
        return Err(Error::Domain {
            what: "exact-form statistic",
            value: total,
            domain: "finite values",
        });
    }
    Ok(fit.n as f64 * total)
}

fn check_component(fit: &FitResult, j: usize) -> Result<()> {
    if j == 0 || j > fit.spec().r {
        return Err(Error::IndexOutOfRange {
            index: j,
            capacity: fit.spec().r,
        });
    }
    Ok(())
}

/// Null draws `Σ_{j ∈ comps} z_jᵀ B_cd z_j` with `z = Π̂⁻¹ Ξ`.
fn quadratic_draws(
    fit: &FitResult,
    obs: &Observations,
    cfg: &BootstrapConfig,
    comps: &[usize],
) -> Result<Vec<f64>> {
    let mult = Multiplier::from_config(fit, obs, cfg)?;
    let blk = tensor_gram(fit.basis());
    let map = fit.index_map();
    let produce = |first: usize, count: usize| -> Vec<f64> {
        let z = mult.z_batch(first as u64, count);
        (0..count)
            .map(|q| {
                comps
                    .iter()
                    .map(|&j| {
                        let zj = &z.row(q)[map.block(j)];
                        dot(zj, &blk.matvec(zj))
                    })
                    .sum()
            })
            .collect()
    };
    let mut draws = Vec::with_capacity(cfg.b_reps);
    for_each_chunk(cfg.b_reps, 0, &produce, |v| draws.extend(v));
    sort_draws(&mut draws);
    Ok(draws)
}

fn decide(kind: TestKind, statistic: f64, sorted: &[f64], alpha: f64) -> TestResult {
    let critical_value = order_statistic(sorted, alpha);
    TestResult {
        kind,
        statistic,
        critical_value,
        null_draws_count: sorted.len(),
        p_value: upper_p_value(sorted, statistic),
        alpha,
        reject_at_alpha: statistic > critical_value,
    }
}

/// Exact-form test of `H0: m_j ≡ m0`.
pub fn test_exact_form(
    fit: &FitResult,
    obs: &Observations,
    cfg: &BootstrapConfig,
    j: usize,
    m0: &dyn Fn(f64, f64) -> f64,
) -> Result<TestResult> {
    check_component(fit, j)?;
    cfg.validate(obs.len(), fit.spec().r)?;
    let stat = l2_statistic(fit, j, m0)?;
    let draws = quadratic_draws(fit, obs, cfg, &[j])?;
    Ok(decide(TestKind::ExactForm, stat, &draws, cfg.alpha))
}

/// Joint exact-form test of `H0: m_j ≡ m0_j` for every `j`.
pub fn test_exact_form_joint(
    fit: &FitResult,
    obs: &Observations,
    cfg: &BootstrapConfig,
    m0: &[&dyn Fn(f64, f64) -> f64],
) -> Result<TestResult> {
    let r = fit.spec().r;
    if m0.len() != r {
        return Err(Error::config(format!(
            "joint test needs {r} null functions, got {}",
            m0.len()
        )));
    }
    cfg.validate(obs.len(), r)?;
    let mut stat = 0.0;
    for (j, f) in m0.iter().enumerate() {
        stat += l2_statistic(fit, j + 1, *f)?;
    }
    let comps: Vec<usize> = (1..=r).collect();
    let draws = quadratic_draws(fit, obs, cfg, &comps)?;
    Ok(decide(TestKind::ExactFormJoint, stat, &draws, cfg.alpha))
}

/// Time-constant restricted fit for component `j`, evaluated on the region's
/// grid. The other components keep their full tensor bases.
pub fn restricted_stationary_surface(
    fit: &FitResult,
    obs: &Observations,
    j: usize,
    region: &ScrResult,
) -> Result<Vec<f64>> {
    check_component(fit, j)?;
    let basis = fit.basis();
    let spec = *basis.spec();
    let (r, c, d) = (spec.r, spec.c, spec.d);
    let map = spec.index_map();
    // identification as in the full fit: ϕ_1 columns only for the first function
    let first_space = |k: usize| if map.is_free(k, 1) { 1 } else { 2 };
    let cols: usize = (1..=r)
        .map(|k| {
            let width = d + 1 - first_space(k);
            if k == j {
                width
            } else {
                c * width
            }
        })
        .sum();
    let rows = obs.len() - r;
    if rows < cols {
        return Err(Error::UnderDetermined { rows, cols });
    }
    let mut w = Mat::zeros(rows, cols);
    let mut a = vec![0.0; c];
    let mut phi = vec![0.0; d];
    let mut gamma_at = 0;
    for row in 0..rows {
        let i = row + r + 1;
        basis.time_values(obs.time(i), &mut a)?;
        let out = w.row_mut(row);
        let mut col = 0;
        for k in 1..=r {
            basis.space_values(obs.regressor(k, i), &mut phi)?;
            let kept = &phi[first_space(k) - 1..];
            if k == j {
                gamma_at = col;
                out[col..col + kept.len()].copy_from_slice(kept);
                col += kept.len();
            } else {
                for v in outer(&a, kept) {
                    out[col] = v;
                    col += 1;
                }
            }
        }
    }
    let ls = least_squares(&w, &obs.y()[r..])?;
    let mut gamma = vec![0.0; d];
    let skip = first_space(j) - 1;
    gamma[skip..].copy_from_slice(&ls.beta[gamma_at..gamma_at + d - skip]);
    let mut phi_grid = vec![0.0; region.grid.y.len()];
    for (k, &y) in region.grid.y.iter().enumerate() {
        basis.space_values_unit(y, &mut phi)?;
        phi_grid[k] = dot(&gamma, &phi);
    }
    let nt = region.grid.t.len();
    Ok((0..nt).flat_map(|_| phi_grid.iter().copied()).collect())
}

/// Best rank-one surface `f(t) g(x)` in the fitted basis, from the leading
/// singular triple of the `c × d` coefficient matrix of `m̂_j`.
pub fn restricted_separable_surface(fit: &FitResult, j: usize, region: &ScrResult) -> Result<Vec<f64>> {
    check_component(fit, j)?;
    let spec = fit.spec();
    let (c, d) = (spec.c, spec.d);
    let beta = fit.block(j);
    let cm = Mat::from_fn(c, d, |i, l| beta[i * d + l]);
    let dec = svd(&cm);
    let s0 = dec.s.first().copied().unwrap_or(0.0);
    let rank1: Vec<f64> = (0..c * d)
        .map(|k| s0 * dec.u[(k / d, 0)] * dec.v[(k % d, 0)])
        .collect();
    let eval = GridEvaluator::new(fit.basis(), &region.grid)?;
    Ok(eval.surface(&rank1))
}

fn embed(kind: TestKind, region: &ScrResult, restricted: &[f64]) -> TestResult {
    let stat = region.sup_distance(restricted);
    TestResult {
        kind,
        statistic: stat,
        critical_value: region.c_alpha,
        null_draws_count: region.sup_draws.len(),
        p_value: region.p_value(stat),
        alpha: region.alpha,
        reject_at_alpha: stat > region.c_alpha,
    }
}

/// Test of `H0: m_j(t, x) ≡ m_j(x)`: rejects when the time-constant fit leaves
/// the simultaneous region of the full fit.
pub fn test_stationarity(
    fit: &FitResult,
    obs: &Observations,
    cfg: &BootstrapConfig,
    j: usize,
) -> Result<TestResult> {
    let region = scr(fit, obs, cfg, j)?;
    let restricted = restricted_stationary_surface(fit, obs, j, &region)?;
    Ok(embed(TestKind::Stationarity, &region, &restricted))
}

/// Test of `H0: m_j(t, x) = f_j(t) g_j(x)`: rejects when the rank-one surface
/// leaves the simultaneous region of the full fit.
pub fn test_separability(
    fit: &FitResult,
    obs: &Observations,
    cfg: &BootstrapConfig,
    j: usize,
) -> Result<TestResult> {
    let region = scr(fit, obs, cfg, j)?;
    let restricted = restricted_separable_surface(fit, j, &region)?;
    Ok(embed(TestKind::Separability, &region, &restricted))
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::BootstrapConfig;
use crate::error::{Error, Result};
use crate::estimate::{regressor_vector, FitResult, Observations};
use crate::linalg::{dot, Mat};
use crate::math::sqrt;
use crate::rng::{fill_normal, stream_id, stream_rng};

/// Label under which every bootstrap draw obtains its random stream.
const XI_LABEL: &str = "xi";

/// Precomputed block vectors for the draws
/// `Ξ = ((n − m − r) m)^{−1/2} Σ_{i=r+1}^{n−m} R_i v_i`, where
/// `v_i[(j, ℓ1, ℓ2)] = a_{ℓ1}(t_i) Σ_{k=i}^{i+m} ϕ_{ℓ2}(X_{j,k}) ε̂_k`.
///
/// Draw `k` uses its own random stream, so any subset of draws can be
/// regenerated independently and in any order.
#[derive(Clone, Debug)]
pub struct Multiplier {
    // rows v_i scaled by the normalizing constant
    v: Mat,
    pi_inv: Mat,
    seed: u64,
}

impl Multiplier {
    pub fn new(fit: &FitResult, obs: &Observations, m: usize, seed: u64) -> Result<Self> {
        let spec = *fit.spec();
        let (r, c, d) = (spec.r, spec.c, spec.d);
        let n = obs.len();
        if fit.residuals.len() + r != n {
            return Err(Error::Dimension(format!(
                "fit has {} residuals but the data imply {}",
                fit.residuals.len(),
                n.saturating_sub(r)
            )));
        }
        if m == 0 || m + r + 1 > n {
            return Err(Error::config(format!(
                "block size m = {m} must lie in 1..={}",
                n.saturating_sub(r + 1)
            )));
        }
        let basis = fit.basis();
        let rd = r * d;
        // x̂_k = w_k ε̂_k for k = r+1..n, stored row by row
        let mut xhat = Mat::zeros(n - r, rd);
        for k in r + 1..=n {
            let w = regressor_vector(obs, basis, k)?;
            let e = fit.residuals[k - r - 1];
            for (dst, src) in xhat.row_mut(k - r - 1).iter_mut().zip(&w) {
                *dst = src * e;
            }
        }
        let rows = n - m - r;
        let scale = 1.0 / sqrt(rows as f64 * m as f64);
        let mut v = Mat::zeros(rows, spec.p());
        let mut window = vec![0.0; rd];
        for k in 0..=m {
            for (s, x) in window.iter_mut().zip(xhat.row(k)) {
                *s += x;
            }
        }
        let mut a = vec![0.0; c];
        for row in 0..rows {
            let i = row + r + 1;
            if row > 0 {
                // slide: add x̂_{i+m}, drop x̂_{i−1}
                let (add, drop) = (row + m, row - 1);
                for q in 0..rd {
                    window[q] += xhat[(add, q)] - xhat[(drop, q)];
                }
            }
            basis.time_values(obs.time(i), &mut a)?;
            let out = v.row_mut(row);
            for j in 0..r {
                for (l1, &al) in a.iter().enumerate() {
                    let base = j * c * d + l1 * d;
                    for l2 in 0..d {
                        out[base + l2] = scale * al * window[j * d + l2];
                    }
                }
            }
        }
        Ok(Multiplier {
            v,
            pi_inv: fit.pi_inv.clone(),
            seed,
        })
    }

    pub fn from_config(fit: &FitResult, obs: &Observations, cfg: &BootstrapConfig) -> Result<Self> {
        Multiplier::new(fit, obs, cfg.m, cfg.seed)
    }

    /// Number of Gaussian multipliers per draw.
    pub fn multipliers(&self) -> usize {
        self.v.rows()
    }

    pub fn p(&self) -> usize {
        self.v.cols()
    }

    /// Scaled block vectors, one per row.
    pub fn block_vectors(&self) -> &Mat {
        &self.v
    }

    /// Draws `first..first + count` of `Ξ`, one per row.
    pub fn xi_batch(&self, first: u64, count: usize) -> Mat {
        let big_n = self.multipliers();
        let mut r = Mat::zeros(count, big_n);
        for q in 0..count {
            let mut rng = stream_rng(self.seed, stream_id(XI_LABEL, first + q as u64));
            fill_normal(&mut rng, r.row_mut(q));
        }
        r.matmul(&self.v)
    }

    /// `Π̂⁻¹ Ξ` for draws `first..first + count`, one per row.
    pub fn z_batch(&self, first: u64, count: usize) -> Mat {
        // Π̂⁻¹ is symmetric, so rows of Ξ Π̂⁻¹ are Π̂⁻¹ Ξ
        self.xi_batch(first, count).matmul(&self.pi_inv)
    }

    pub fn xi(&self, stream: u64) -> Vec<f64> {
        self.xi_batch(stream, 1).row(0).to_vec()
    }
}

/// One bootstrap draw of `Ξ` from stream `stream`.
pub fn draw_xi(
    fit: &FitResult,
    obs: &Observations,
    cfg: &BootstrapConfig,
    stream: u64,
) -> Result<Vec<f64>> {
    Ok(Multiplier::from_config(fit, obs, cfg)?.xi(stream))
}

/// `T̂_1 = Ξᵀ Π̂⁻¹ (b(t, x) ⊗ I_r) I_j`, the draw of `√n (m̂_j − m_j)(t, x)`.
pub fn t1_draw(xi: &[f64], fit: &FitResult, j: usize, t: f64, x: f64) -> Result<f64> {
    let r = fit.spec().r;
    if j == 0 || j > r {
        return Err(Error::IndexOutOfRange {
            index: j,
            capacity: r,
        });
    }
    if xi.len() != fit.p() {
        return Err(Error::Dimension(format!(
            "draw has length {}, expected {}",
            xi.len(),
            fit.p()
        )));
    }
    let b = fit.basis().tensor(t, x)?;
    let z = fit.pi_inv.matvec(xi);
    Ok(dot(&z[fit.index_map().block(j)], &b))
}

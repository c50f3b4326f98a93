//! Multiplier bootstrap: Gaussian draws `Ξ` built from residual-weighted block
//! sums, simultaneous confidence regions, the exact-form `L²` test, and the
//! structural tests obtained by embedding a restricted fit in the region.
//!
//! All integrals over the covariate are taken in transformed coordinates
//! `(t, ỹ) ∈ [0, 1]²` with `x = y⁻¹(ỹ)`, where the unweighted mapped basis is
//! orthonormal.

mod band;
mod hypothesis;
mod multiplier;

pub use band::{scr, GridEvaluator, ScrGrid, ScrResult};
pub use hypothesis::{
    compute_b_matrix, restricted_separable_surface, restricted_stationary_surface,
    test_exact_form, test_exact_form_joint, test_separability, test_stationarity, TestKind,
    TestResult,
};
pub use multiplier::{draw_xi, t1_draw, Multiplier};

use alloc::format;

use crate::error::{Error, Result};
use crate::math::floor;

/// Draw counts per parallel job. Results never depend on it.
pub(crate) const DRAW_CHUNK: usize = 64;

/// Settings of the multiplier bootstrap.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapConfig {
    /// Block length `m` of the residual-weighted sums.
    pub m: usize,
    /// Replications used for the pointwise standard deviation `ĥ` (and for
    /// the null draws of the exact-form test).
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub b_reps: usize,
    /// Replications of the sup statistic.
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub m_reps: usize,
    pub grid_t: usize,
    pub grid_y: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Covariate range covered by the region. Without it the `ỹ` grid uses
    /// the cell midpoints of `[0, 1]`.
    pub x_range: Option<(f64, f64)>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            m: 5,
            b_reps: 1000,
            m_reps: 1000,
            grid_t: 100,
            grid_y: 100,
            seed: 0,
            alpha: 0.05,
            x_range: None,
        }
    }
}

impl BootstrapConfig {
    /// Checks the settings against a sample of `n` observations and `r` lags.
    pub fn validate(&self, n: usize, r: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config("block size m must be at least 1"));
        }
        if self.m + r + 1 > n {
            return Err(Error::config(format!(
                "block size m = {} exceeds n - r - 1 = {}",
                self.m,
                n.saturating_sub(r + 1)
            )));
        }
        if self.b_reps < 2 {
            return Err(Error::config("B must be at least 2"));
        }
        if self.m_reps == 0 {
            return Err(Error::config("M must be at least 1"));
        }
        if self.grid_t < 2 || self.grid_y < 2 {
            return Err(Error::config("grid sizes must be at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let Some((lo, hi)) = self.x_range {
            if !(lo < hi) {
                return Err(Error::config(format!("x range [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }
}

/// Order statistic `T_(⌊K(1 − α)⌋)` of ascending `sorted`, index clamped to `1..=K`.
pub(crate) fn order_statistic(sorted: &[f64], alpha: f64) -> f64 {
    let k = sorted.len();
    let idx = floor(k as f64 * (1.0 - alpha) + 1e-9) as usize;
    sorted[idx.clamp(1, k) - 1]
}

/// `1 − #{draws ≤ stat} / K` for ascending `sorted`.
pub(crate) fn upper_p_value(sorted: &[f64], stat: f64) -> f64 {
    let below = sorted.partition_point(|&v| v <= stat);
    1.0 - below as f64 / sorted.len() as f64
}

pub(crate) fn sort_draws(v: &mut [f64]) {
    v.sort_by(f64::total_cmp);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistic_indexing() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(order_statistic(&v, 0.1), 9.0);
        assert_eq!(order_statistic(&v, 0.05), 9.0);
        assert_eq!(order_statistic(&v, 0.99), 1.0);
        assert_eq!(order_statistic(&[3.5], 0.05), 3.5);
    }

    #[test]
    fn quantile_is_monotone_in_alpha() {
        let v: alloc::vec::Vec<f64> = (0..300).map(|i| (i as f64).sqrt()).collect();
        let q: alloc::vec::Vec<f64> =
            [0.01, 0.05, 0.1].iter().map(|&a| order_statistic(&v, a)).collect();
        assert!(q[0] >= q[1] && q[1] >= q[2]);
    }

    #[test]
    fn p_value_counts_ties_as_below() {
        let v = [1.0, 2.0, 2.0, 3.0];
        assert_eq!(upper_p_value(&v, 2.0), 0.25);
        assert_eq!(upper_p_value(&v, 0.0), 1.0);
        assert_eq!(upper_p_value(&v, 5.0), 0.0);
    }

    #[test]
    fn config_validation() {
        let cfg = BootstrapConfig::default();
        assert!(cfg.validate(100, 1).is_ok());
        assert!(BootstrapConfig { m: 0, ..cfg }.validate(100, 1).is_err());
        assert!(BootstrapConfig { m: 99, ..cfg }.validate(100, 1).is_err());
        assert!(BootstrapConfig { m: 98, ..cfg }.validate(100, 1).is_ok());
        assert!(BootstrapConfig { alpha: 1.0, ..cfg }.validate(100, 1).is_err());
    }
}

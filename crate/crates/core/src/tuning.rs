//! Data-driven choice of the sieve orders `(c, d)` by validation forecast
//! error, and of the block size `m` by the minimum-volatility rule.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::basis::SieveSpec;
use crate::error::{Error, Result};
use crate::estimate::{fit, FitResult, Observations};
use crate::inference::Multiplier;
use crate::linalg::Mat;
use crate::math::{cbrt, ceil, floor, ln, log2, sqrt};
use crate::par::map_indexed;

/// Candidate sets for tuning.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TuneGrid {
    pub c_candidates: Vec<usize>,
    pub d_candidates: Vec<usize>,
    /// Length of the validation stretch at the end of the sample.
    pub l: usize,
    /// Interior block sizes `m_1..=m_{n0}`; neighbours up to `h0` away on
    /// either side are also evaluated.
    pub m_candidates: (usize, usize),
    pub h0: usize,
}

impl TuneGrid {
    /// Defaults for a sample of size `n`: `c, d ∈ {2, …, ⌈2 ln n⌉}`,
    /// `l = ⌊3 log₂ n⌋`, `h0 = 3`, and interior block sizes from `h0 + 1` to
    /// `⌈3 n^{1/3}⌉` so that every neighbour is a valid block size.
    pub fn default_for(n: usize) -> Self {
        let nf = n.max(2) as f64;
        let top = (ceil(2.0 * ln(nf)) as usize).max(2);
        let h0 = 3;
        let m_hi = (ceil(3.0 * cbrt(nf)) as usize).max(h0 + 1);
        TuneGrid {
            c_candidates: (2..=top).collect(),
            d_candidates: (2..=top).collect(),
            l: floor(3.0 * log2(nf)) as usize,
            m_candidates: (h0 + 1, m_hi),
            h0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let sorted = |v: &[usize]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]) && v[0] >= 1;
        if !sorted(&self.c_candidates) || !sorted(&self.d_candidates) {
            return Err(Error::config(
                "candidate orders must be nonempty, positive and strictly ascending",
            ));
        }
        if self.l == 0 || 2 * self.l >= n {
            return Err(Error::config(format!(
                "validation length l = {} must satisfy 0 < l < n/2 = {}",
                self.l,
                n as f64 / 2.0
            )));
        }
        let (lo, hi) = self.m_candidates;
        if lo > hi || lo <= self.h0 {
            return Err(Error::config(format!(
                "block-size range {lo}..={hi} must be ascending with m_1 > h0 = {}",
                self.h0
            )));
        }
        Ok(())
    }
}

/// Outcome of [`select_cd`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CdSelection {
    pub c: usize,
    pub d: usize,
    pub mse: f64,
    /// `(c, d, validation MSE)` for every candidate that could be fitted.
    pub table: Vec<(usize, usize, f64)>,
    /// The choice sits on the boundary of the candidate grid, a hint that the
    /// grid may be too small.
    pub at_grid_edge: bool,
}

/// Chooses `(c, d)` minimizing the one-step-ahead forecast MSE over the last
/// `l` observations, fitting on the first `n − l`. Ties go to the smaller
/// `p = r·c·d`, then the smaller `c`.
pub fn select_cd(obs: &Observations, template: &SieveSpec, grid: &TuneGrid) -> Result<CdSelection> {
    let n = obs.len();
    grid.validate(n)?;
    let train = obs.prefix(n - grid.l);
    let pairs: Vec<(usize, usize)> = grid
        .c_candidates
        .iter()
        .flat_map(|&c| grid.d_candidates.iter().map(move |&d| (c, d)))
        .collect();
    let outcomes = map_indexed(pairs.len(), |q| -> Result<f64> {
        let (c, d) = pairs[q];
        let spec = template.with_orders(c, d);
        let f = fit(&train, &spec)?;
        let mut sse = 0.0;
        for k in n - grid.l + 1..=n {
            let e = obs.y()[k - 1] - f.forecast(obs, k)?;
            sse += e * e;
        }
        Ok(sse / grid.l as f64)
    });

    let mut table = Vec::new();
    let mut failures = String::new();
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for (&(c, d), out) in pairs.iter().zip(outcomes) {
        match out {
            Ok(mse) if mse.is_finite() => {
                table.push((c, d, mse));
                let key = (mse, template.r * c * d, c, d);
                let better = match best {
                    None => true,
                    Some(b) => (key.0, key.1, key.2) < (b.0, b.1, b.2),
                };
                if better {
                    best = Some(key);
                }
            }
            Ok(mse) => failures.push_str(&format!(" (c={c}, d={d}): MSE {mse};")),
            Err(e) => failures.push_str(&format!(" (c={c}, d={d}): {e};")),
        }
    }
    let (mse, _, c, d) = best.ok_or_else(|| {
        Error::Tuning(format!("no candidate order could be fitted:{failures}"))
    })?;
    let edge = |v: &[usize], x: usize| v.len() > 1 && (x == v[0] || x == v[v.len() - 1]);
    Ok(CdSelection {
        c,
        d,
        mse,
        table,
        at_grid_edge: edge(&grid.c_candidates, c) || edge(&grid.d_candidates, d),
    })
}

/// Block-sum long-run covariance
/// `Ω̂(m) = ((n − m − r + 1) m)⁻¹ Σ_{i=r+1}^{n−m} v_i v_iᵀ`.
pub fn omega_hat(fit: &FitResult, obs: &Observations, m: usize) -> Result<Mat> {
    let mult = Multiplier::new(fit, obs, m, 0)?;
    let rows = mult.multipliers() as f64;
    // the stored vectors already carry ((n − m − r) m)^{-1/2}
    Ok(mult.block_vectors().gram(1.0 + 1.0 / rows))
}

/// Outcome of [`select_m`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MSelection {
    pub m: usize,
    /// `(m, se(m))` over the interior range.
    pub se_table: Vec<(usize, f64)>,
}

/// Minimum-volatility block size: `se(m)² = (2h0)⁻¹ Σ_{|k|≤h0} ‖Ω̄_m − Ω̂_{m+k}‖_F²`
/// with `Ω̄_m` the neighbourhood mean. Ties go to the smallest `m`.
pub fn select_m(fit: &FitResult, obs: &Observations, grid: &TuneGrid) -> Result<MSelection> {
    let (lo, hi) = grid.m_candidates;
    if lo > hi || lo <= grid.h0 {
        return Err(Error::config(format!(
            "block-size range {lo}..={hi} must be ascending with m_1 > h0 = {}",
            grid.h0
        )));
    }
    let h0 = grid.h0;
    let first = lo - h0;
    let last = hi + h0;
    let r = fit.spec().r;
    if last + r + 1 > obs.len() {
        return Err(Error::config(format!(
            "block sizes up to {last} need more than {} observations",
            last + r + 1
        )));
    }
    let omegas = map_indexed(last - first + 1, |q| omega_hat(fit, obs, first + q))
        .into_iter()
        .collect::<Result<Vec<Mat>>>()?;
    let p = fit.p();
    let mut se_table = Vec::with_capacity(hi - lo + 1);
    for m in lo..=hi {
        let hood = &omegas[m - h0 - first..=m + h0 - first];
        let mut mean = Mat::zeros(p, p);
        for o in hood {
            for (dst, src) in mean.as_mut_slice().iter_mut().zip(o.as_slice()) {
                *dst += src;
            }
        }
        mean.scale(1.0 / hood.len() as f64);
        let ss: f64 = hood.iter().map(|o| frob_diff_sq(o, &mean)).sum();
        let se = if h0 == 0 { 0.0 } else { sqrt(ss / (2 * h0) as f64) };
        se_table.push((m, se));
    }
    let mut best = se_table[0];
    for &(m, se) in &se_table[1..] {
        if se < best.1 {
            best = (m, se);
        }
    }
    Ok(MSelection {
        m: best.0,
        se_table,
    })
}

fn frob_diff_sq(a: &Mat, b: &Mat) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, Mapping};
    use crate::linalg::symmetric_eigenvalues;
    use crate::simulate::{gen_error_process, ErrorProcessSpec};
    use alloc::vec;

    fn constant_spec() -> SieveSpec {
        SieveSpec {
            time_family: BasisFamily::Fourier,
            space_family: BasisFamily::Fourier,
            mapping: Mapping::algebraic(1.0).unwrap(),
            c: 1,
            d: 1,
            r: 1,
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = TuneGrid::default_for(500);
        assert_eq!(g.l, 26);
        assert_eq!(g.c_candidates.first(), Some(&2));
        assert_eq!(g.c_candidates.last(), Some(&13));
        assert_eq!(g.m_candidates, (4, 24));
        assert!(g.validate(500).is_ok());
    }

    #[test]
    fn single_candidate_is_returned() {
        let y = gen_error_process(&ErrorProcessSpec::tvar2(), 300, 1).unwrap();
        let obs = Observations::lagged(y).unwrap();
        let grid = TuneGrid {
            c_candidates: vec![3],
            d_candidates: vec![2],
            ..TuneGrid::default_for(300)
        };
        let sel = select_cd(&obs, &constant_spec(), &grid).unwrap();
        assert_eq!((sel.c, sel.d), (3, 2));
        assert!(!sel.at_grid_edge);
    }

    #[test]
    fn zero_residuals_give_zero_omega_and_smallest_m() {
        let y: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let obs = Observations::lagged(y).unwrap();
        let mut f = fit(&obs, &constant_spec()).unwrap();
        f.residuals.iter_mut().for_each(|e| *e = 0.0);
        let o = omega_hat(&f, &obs, 5).unwrap();
        assert!(o.as_slice().iter().all(|&v| v == 0.0));
        let grid = TuneGrid::default_for(200);
        let sel = select_m(&f, &obs, &grid).unwrap();
        assert_eq!(sel.m, grid.m_candidates.0);
        assert!(sel.se_table.iter().all(|&(_, se)| se == 0.0));
    }

    #[test]
    fn one_point_interior_range() {
        let y = gen_error_process(&ErrorProcessSpec::tvar2(), 400, 2).unwrap();
        let obs = Observations::lagged(y).unwrap();
        let f = fit(&obs, &constant_spec()).unwrap();
        let grid = TuneGrid {
            m_candidates: (7, 7),
            ..TuneGrid::default_for(400)
        };
        assert_eq!(select_m(&f, &obs, &grid).unwrap().m, 7);
    }

    #[test]
    fn omega_is_symmetric_psd() {
        let y = gen_error_process(&ErrorProcessSpec::tvar2(), 600, 4).unwrap();
        let obs = Observations::lagged(y).unwrap();
        let spec = SieveSpec {
            c: 3,
            d: 3,
            ..constant_spec()
        };
        let f = fit(&obs, &spec).unwrap();
        let o = omega_hat(&f, &obs, 8).unwrap();
        assert!(o.is_symmetric(0.0));
        let ev = symmetric_eigenvalues(&o);
        assert!(ev[0] >= -1e-10 * o.trace());
    }

    #[test]
    fn omega_tracks_iid_variance() {
        let iid = ErrorProcessSpec::new(crate::simulate::ErrorProcessKind::TvAr2 {
            a1: crate::simulate::Coefficient::Constant(0.0),
            a2: crate::simulate::Coefficient::Constant(0.0),
        });
        let mut ratios = Vec::new();
        for seed in 0..20 {
            let e = gen_error_process(&iid, 4000, 100 + seed).unwrap();
            let obs = Observations::lagged(e).unwrap();
            let f = fit(&obs, &constant_spec()).unwrap();
            let var = f.residuals.iter().map(|v| v * v).sum::<f64>() / f.residuals.len() as f64;
            let o = omega_hat(&f, &obs, 16).unwrap();
            ratios.push(o[(0, 0)] / var);
        }
        let mean = ratios.iter().sum::<f64>() / 20.0;
        assert!((mean - 1.0).abs() <= 0.15, "mean ratio {mean}");
        // single series carry sampling noise of roughly 7% at this m
        let close = ratios.iter().filter(|q| (*q - 1.0).abs() <= 0.15).count();
        assert!(close >= 16, "{ratios:?}");
    }

    #[test]
    fn se_is_invariant_to_residual_sign() {
        let y = gen_error_process(&ErrorProcessSpec::tvar2(), 500, 6).unwrap();
        let obs = Observations::lagged(y).unwrap();
        let spec = SieveSpec {
            c: 2,
            d: 3,
            ..constant_spec()
        };
        let f = fit(&obs, &spec).unwrap();
        let mut g = f.clone();
        g.residuals.iter_mut().for_each(|e| *e = -*e);
        let grid = TuneGrid::default_for(500);
        let a = select_m(&f, &obs, &grid).unwrap();
        let b = select_m(&g, &obs, &grid).unwrap();
        assert_eq!(a, b);
        assert!(a.se_table.iter().all(|&(_, se)| se >= 0.0));
    }

    #[test]
    fn chosen_orders_attain_the_table_minimum() {
        let y = gen_error_process(&ErrorProcessSpec::tvar2(), 500, 8).unwrap();
        let obs = Observations::lagged(y).unwrap();
        let grid = TuneGrid {
            c_candidates: vec![1, 2, 3, 4],
            d_candidates: vec![1, 2, 3, 4, 5],
            ..TuneGrid::default_for(500)
        };
        let sel = select_cd(&obs, &constant_spec(), &grid).unwrap();
        assert_eq!(sel.table.len(), 20);
        let min = sel.table.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
        assert_eq!(sel.mse, min);
        assert!(grid.c_candidates.contains(&sel.c) && grid.d_candidates.contains(&sel.d));
        // a refit at the chosen orders reproduces the reported error
        let again = TuneGrid {
            c_candidates: vec![sel.c],
            d_candidates: vec![sel.d],
            ..grid
        };
        assert_eq!(select_cd(&obs, &constant_spec(), &again).unwrap().mse, sel.mse);
    }

    #[test]
    fn equal_errors_prefer_fewer_coefficients() {
        // a constant series forecasts perfectly at every order
        let obs = Observations::lagged(vec![2.5; 200]).unwrap();
        let grid = TuneGrid {
            c_candidates: vec![2, 3],
            d_candidates: vec![1, 2],
            ..TuneGrid::default_for(200)
        };
        let spec = SieveSpec {
            space_family: crate::basis::BasisFamily::Legendre,
            ..constant_spec()
        };
        let sel = select_cd(&obs, &spec, &grid);
        // the constant regressor makes wider designs singular; the narrowest survives
        let sel = sel.unwrap();
        assert_eq!((sel.c, sel.d), (2, 1));
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let g = TuneGrid {
            c_candidates: vec![3, 2],
            ..TuneGrid::default_for(300)
        };
        assert!(g.validate(300).is_err());
        let g = TuneGrid {
            l: 200,
            ..TuneGrid::default_for(300)
        };
        assert!(g.validate(300).is_err());
        let g = TuneGrid {
            m_candidates: (3, 10),
            ..TuneGrid::default_for(300)
        };
        assert!(g.validate(300).is_err());
    }

    #[test]
    fn truth_in_the_span_is_forecast_as_well_as_the_oracle_order() {
        use crate::basis::eval_tensor_basis;
        use crate::rng::{fill_normal, stream_rng};
        let truth = SieveSpec {
            c: 2,
            d: 3,
            ..constant_spec()
        };
        let beta = [0.4, -0.8, 0.3, 0.6, 0.2, -0.5];
        let n = 600;
        let mut rng = stream_rng(21, 0);
        let mut x = vec![0.0; n];
        let mut e = vec![0.0; n];
        fill_normal(&mut rng, &mut x);
        fill_normal(&mut rng, &mut e);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let b = eval_tensor_basis(&truth, (i + 1) as f64 / n as f64, x[i]).unwrap();
                crate::linalg::dot(&b, &beta) + 0.3 * e[i]
            })
            .collect();
        let obs = Observations::panel(y.clone(), vec![x.clone()]).unwrap();
        let grid = TuneGrid {
            c_candidates: vec![1, 2, 3, 4],
            d_candidates: vec![1, 2, 3, 4, 5],
            ..TuneGrid::default_for(n)
        };
        let sel = select_cd(&obs, &constant_spec(), &grid).unwrap();

        // independent oracle: dense normal equations at the true orders
        let train = n - grid.l;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| eval_tensor_basis(&truth, (i + 1) as f64 / n as f64, x[i]).unwrap())
            .collect();
        let w = nalgebra::DMatrix::from_fn(train, 6, |i, k| rows[i][k]);
        let yv = nalgebra::DVector::from_column_slice(&y[..train]);
        let b = (w.transpose() * &w).try_inverse().unwrap() * w.transpose() * yv;
        let oracle = (train..n)
            .map(|i| {
                let f: f64 = (0..6).map(|k| rows[i][k] * b[k]).sum();
                (y[i] - f) * (y[i] - f)
            })
            .sum::<f64>()
            / grid.l as f64;
        assert!(sel.mse <= 1.1 * oracle, "{} vs oracle {oracle}", sel.mse);
    }
}

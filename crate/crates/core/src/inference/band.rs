use alloc::vec;
use alloc::vec::Vec;

use super::multiplier::Multiplier;
use super::{order_statistic, sort_draws, upper_p_value, BootstrapConfig, DRAW_CHUNK};
use crate::basis::{Mapping, SieveBasis};
use crate::error::{Error, Result};
use crate::estimate::{FitResult, Observations};
use crate::linalg::Mat;
use crate::math::sqrt;
use crate::par::map_indexed;

/// Chunks evaluated per parallel wave; bounds the memory held by draws.
const WAVE: usize = 16;

/// Evaluation grid, uniform in `(t, ỹ)`. Point `it · len(y) + iy` is
/// `(t[it], x[iy])` with `x[iy] = y⁻¹(y[iy])`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScrGrid {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

impl ScrGrid {
    /// `nt` times spanning `[0, 1]` and `ny` transformed covariate values,
    /// spanning `[y(lo), y(hi)]` when a range is given and otherwise the cell
    /// midpoints `(k − ½)/ny`.
    pub fn new(mapping: &Mapping, nt: usize, ny: usize, x_range: Option<(f64, f64)>) -> Result<Self> {
        if nt < 2 || ny < 2 {
            return Err(Error::config("grid sizes must be at least 2"));
        }
        let t = (0..nt).map(|i| i as f64 / (nt - 1) as f64).collect();
        let y: Vec<f64> = match x_range {
            Some((lo, hi)) => {
                let (a, b) = (mapping.to_unit(lo)?, mapping.to_unit(hi)?);
                (0..ny)
                    .map(|k| {
                        if k + 1 == ny {
                            b
                        } else {
                            a + (b - a) * k as f64 / (ny - 1) as f64
                        }
                    })
                    .collect()
            }
            None => (0..ny).map(|k| (k as f64 + 0.5) / ny as f64).collect(),
        };
        let x = y
            .iter()
            .map(|&v| mapping.from_unit(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScrGrid { t, y, x })
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(t, x)` of flat point `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let ny = self.y.len();
        (self.t[idx / ny], self.x[idx % ny])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Evaluates surfaces `a(t)ᵀ C ϕ(ỹ)` on a grid, for `c × d` coefficient
/// matrices `C` stored row-major.
#[derive(Clone, Debug)]
pub struct GridEvaluator {
    a: Mat,
    phi_t: Mat,
}

impl GridEvaluator {
    pub fn new(basis: &SieveBasis, grid: &ScrGrid) -> Result<Self> {
        let (c, d) = (basis.spec().c, basis.spec().d);
        let mut a = Mat::zeros(grid.t.len(), c);
        for (i, &t) in grid.t.iter().enumerate() {
            basis.time_values(t, a.row_mut(i))?;
        }
        let mut phi_t = Mat::zeros(d, grid.y.len());
        let mut buf = vec![0.0; d];
        for (k, &y) in grid.y.iter().enumerate() {
            basis.space_values_unit(y, &mut buf)?;
            for (l, v) in buf.iter().enumerate() {
                phi_t[(l, k)] = *v;
            }
        }
        Ok(GridEvaluator { a, phi_t })
    }

    /// Surface values in grid order.
    pub fn surface(&self, coeffs: &[f64]) -> Vec<f64> {
        let c = self.a.cols();
        let d = self.phi_t.rows();
        let cm = Mat::from_fn(c, d, |i, l| coeffs[i * d + l]);
        let u = self.a.matmul(&cm);
        u.matmul(&self.phi_t).into_vec()
    }
}

/// Simultaneous confidence region for `m_j` on a grid.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScrResult {
    pub j: usize,
    pub n: usize,
    pub alpha: f64,
    pub grid: ScrGrid,
    pub m_hat: Vec<f64>,
    pub h_hat: Vec<f64>,
    pub c_alpha: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Sorted draws of `sup |T̂_1 / ĥ|`.
    pub sup_draws: Vec<f64>,
}

impl ScrResult {
    /// Whether `f(t, x)` lies inside the band at every grid point.
    pub fn covers(&self, f: impl Fn(f64, f64) -> f64) -> bool {
        self.grid
            .points()
            .enumerate()
            .all(|(i, (t, x))| {
                let v = f(t, x);
                self.lower[i] <= v && v <= self.upper[i]
            })
    }

    /// `sup_grid √n |s − m̂| / ĥ` for another surface `s` in grid order.
    pub fn sup_distance(&self, surface: &[f64]) -> f64 {
        let rn = sqrt(self.n as f64);
        surface
            .iter()
            .zip(&self.m_hat)
            .zip(&self.h_hat)
            .map(|((s, m), h)| rn * (s - m).abs() / h)
            .fold(0.0, f64::max)
    }

    /// `ĉ_α` for another level from the same sup draws.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        order_statistic(&self.sup_draws, alpha)
    }

    /// Share of sup draws exceeding `stat`.
    pub fn p_value(&self, stat: f64) -> f64 {
        upper_p_value(&self.sup_draws, stat)
    }
}

/// Simultaneous confidence region for `m_j`.
///
/// `B` shared draws of `Π̂⁻¹ Ξ` give `ĥ` at every grid point; `M` further
/// draws give the sup statistic whose `⌊M(1 − α)⌋`-th order statistic is `ĉ_α`.
pub fn scr(fit: &FitResult, obs: &Observations, cfg: &BootstrapConfig, j: usize) -> Result<ScrResult> {
    let spec = *fit.spec();
    if j == 0 || j > spec.r {
        return Err(Error::IndexOutOfRange {
            index: j,
            capacity: spec.r,
        });
    }
    cfg.validate(obs.len(), spec.r)?;
    let grid = ScrGrid::new(&spec.mapping, cfg.grid_t, cfg.grid_y, cfg.x_range)?;
    let eval = GridEvaluator::new(fit.basis(), &grid)?;
    let block = fit.index_map().block(j);
    let m_hat = eval.surface(&fit.beta[block.clone()]);
    let mult = Multiplier::from_config(fit, obs, cfg)?;

    let g = grid.len();
    let draw_surfaces = |first: usize, count: usize| -> Vec<Vec<f64>> {
        let z = mult.z_batch(first as u64, count);
        (0..count)
            .map(|q| eval.surface(&z.row(q)[block.clone()]))
            .collect()
    };

    // Welford accumulation in draw order
    let mut mean = vec![0.0; g];
    let mut m2 = vec![0.0; g];
    let mut seen = 0usize;
    for_each_chunk(cfg.b_reps, 0, &draw_surfaces, |surfaces| {
        for s in surfaces {
            seen += 1;
            let w = 1.0 / seen as f64;
            for ((mu, acc), &v) in mean.iter_mut().zip(m2.iter_mut()).zip(&s) {
                let delta = v - *mu;
                *mu += delta * w;
                *acc += delta * (v - *mu);
            }
        }
    });
    let denom = (cfg.b_reps - 1) as f64;
    let h_hat: Vec<f64> = m2.iter().map(|v| sqrt(v / denom)).collect();
    if let Some(idx) = h_hat.iter().position(|h| !(*h > 1e-300) || !h.is_finite()) {
        let (t, x) = grid.point(idx);
        return Err(Error::DegenerateVariance { t, x });
    }

    let mut sup_draws = Vec::with_capacity(cfg.m_reps);
    for_each_chunk(cfg.m_reps, cfg.b_reps, &draw_surfaces, |surfaces| {
        for s in surfaces {
            let sup = s
                .iter()
                .zip(&h_hat)
                .map(|(v, h)| (v / h).abs())
                .fold(0.0, f64::max);
            sup_draws.push(sup);
        }
    });
    sort_draws(&mut sup_draws);
    let c_alpha = order_statistic(&sup_draws, cfg.alpha);

    let half: Vec<f64> = h_hat
        .iter()
        .map(|h| c_alpha * h / sqrt(obs.len() as f64))
        .collect();
    let lower = m_hat.iter().zip(&half).map(|(m, w)| m - w).collect();
    let upper = m_hat.iter().zip(&half).map(|(m, w)| m + w).collect();
    Ok(ScrResult {
        j,
        n: obs.len(),
        alpha: cfg.alpha,
        grid,
        m_hat,
        h_hat,
        c_alpha,
        lower,
        upper,
        sup_draws,
    })
}

/// Runs `produce(first, count)` over `total` draws starting at stream
/// `offset`, in parallel waves, and hands results to `consume` in draw order.
pub(crate) fn for_each_chunk<T, P, C>(total: usize, offset: usize, produce: &P, mut consume: C)
where
    T: Send,
    P: Fn(usize, usize) -> T + Sync,
    C: FnMut(T),
{
    let chunks = total.div_ceil(DRAW_CHUNK);
    let mut done = 0;
    while done < chunks {
        let wave = WAVE.min(chunks - done);
        let results = map_indexed(wave, |q| {
            let chunk = done + q;
            let first = chunk * DRAW_CHUNK;
            let count = DRAW_CHUNK.min(total - first);
            produce(offset + first, count)
        });
        for r in results {
            consume(r);
        }
        done += wave;
    }
}

//! One-dimensional orthonormal bases on `[0, 1]`, mapped space bases on
//! unbounded domains, and the hierarchical tensor basis
//! `b_{l1,l2}(t, x) = φ_{l1}(t) · ϕ_{l2}(x)`.

mod mapping;
pub mod wavelet;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

pub use mapping::{Mapping, MappingKind};
use wavelet::ScalingTable;

use crate::error::{Error, Result};
use crate::estimate::IndexMap;
use crate::math::{ceil, cos, log2, sin, sqrt};
use crate::quadrature::GaussLegendre;

/// A family of basis functions on `[0, 1]`.
///
/// Fourier functions are ordered `1, √2 cos 2πt, √2 sin 2πt, √2 cos 4πt, …`.
/// Polynomial families are indexed by degree + 1 and scaled to unit norm in
/// `L²([0, 1])`; only Legendre is orthogonal under that measure. Wavelets are
/// the `2^fine_level` periodized Daubechies scaling functions at `fine_level`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum BasisFamily {
    Fourier,
    Legendre,
    Chebyshev1,
    Jacobi {
        alpha: f64,
        beta: f64,
    },
    Daubechies {
        order: usize,
        coarse_level: u32,
        fine_level: u32,
    },
}

impl BasisFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisFamily::Jacobi { alpha, beta } => {
                if !(alpha > -1.0 && beta > -1.0) {
                    return Err(Error::config(alloc::format!(
                        "Jacobi parameters must exceed -1, got alpha = {alpha}, beta = {beta}"
                    )));
                }
            }
            BasisFamily::Daubechies {
                order,
                coarse_level,
                fine_level,
            } => {
                wavelet::filter(order)?;
                if fine_level <= coarse_level {
                    return Err(Error::config(alloc::format!(
                        "wavelet fine level {fine_level} must exceed coarse level {coarse_level}"
                    )));
                }
                if fine_level > 20 {
                    return Err(Error::config("wavelet fine level above 20"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Number of functions the family can supply.
    pub fn capacity(&self) -> usize {
        match *self {
            BasisFamily::Daubechies { fine_level, .. } => 1usize << fine_level,
            _ => usize::MAX,
        }
    }

    /// Same family, with wavelet resolution raised so that at least `count`
    /// functions exist.
    pub fn with_capacity_for(self, count: usize) -> Self {
        match self {
            BasisFamily::Daubechies {
                order,
                coarse_level,
                ..
            } => {
                let needed = ceil(log2(count.max(1) as f64)) as u32;
                BasisFamily::Daubechies {
                    order,
                    coarse_level,
                    fine_level: needed.max(coarse_level + 1),
                }
            }
            other => other,
        }
    }

    /// Daubechies-`order` scaling functions sized for `count` slots.
    pub fn daubechies(order: usize, count: usize) -> Self {
        BasisFamily::Daubechies {
            order,
            coarse_level: 0,
            fine_level: 1,
        }
        .with_capacity_for(count)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BasisFamily::Fourier => "fourier",
            BasisFamily::Legendre => "legendre",
            BasisFamily::Chebyshev1 => "chebyshev1",
            BasisFamily::Jacobi { .. } => "jacobi",
            BasisFamily::Daubechies { .. } => "daubechies",
        }
    }
}

/// The first `count` functions of a family, with any normalization constants
/// or scaling-function tables precomputed. Immutable and cheap to clone.
#[derive(Clone, Debug)]
pub struct Basis1d {
    family: BasisFamily,
    count: usize,
    // reciprocal L² norms for the non-orthogonal polynomial families
    inv_norms: Vec<f64>,
    table: Option<Arc<ScalingTable>>,
}

impl Basis1d {
    pub fn new(family: BasisFamily, count: usize) -> Result<Self> {
        family.validate()?;
        if count == 0 {
            return Err(Error::config("basis needs at least one function"));
        }
        if count > family.capacity() {
            return Err(Error::IndexOutOfRange {
                index: count,
                capacity: family.capacity(),
            });
        }
        let mut inv_norms = Vec::new();
        let mut table = None;
        match family {
            BasisFamily::Chebyshev1 | BasisFamily::Jacobi { .. } => {
                // squared degree-(count-1) polynomials are integrated exactly
                let gl = GaussLegendre::new(count + 1);
                let mut vals = vec![0.0; count];
                let mut sq = vec![0.0; count];
                for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
                    raw_polynomials(family, 2.0 * t - 1.0, &mut vals);
                    for (s, v) in sq.iter_mut().zip(&vals) {
                        *s += w * v * v;
                    }
                }
                inv_norms = sq.iter().map(|s| 1.0 / sqrt(*s)).collect();
            }
            BasisFamily::Daubechies { order, .. } => {
                table = Some(ScalingTable::new(order)?);
            }
            _ => {}
        }
        Ok(Basis1d {
            family,
            count,
            inv_norms,
            table,
        })
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `φ_index(t)` with 1-based `index`.
    pub fn eval(&self, index: usize, t: f64) -> Result<f64> {
        if index == 0 || index > self.count {
            return Err(Error::IndexOutOfRange {
                index,
                capacity: self.count,
            });
        }
        check_unit(t)?;
        let mut out = vec![0.0; index];
        self.fill(t, &mut out);
        Ok(out[index - 1])
    }

    /// All `len()` values at `t` (or the first `out.len()`), without domain checks.
    pub fn fill(&self, t: f64, out: &mut [f64]) {
        let n = out.len().min(self.count);
        match self.family {
            BasisFamily::Fourier => {
                out[0] = 1.0;
                for i in 1..n {
                    let k = i.div_ceil(2) as f64;
                    let arg = 2.0 * PI * k * t;
                    out[i] = SQRT_2 * if i % 2 == 1 { cos(arg) } else { sin(arg) };
                }
            }
            BasisFamily::Legendre => {
                let x = 2.0 * t - 1.0;
                let (mut p0, mut p1) = (1.0, x);
                for (i, slot) in out.iter_mut().enumerate().take(n) {
                    let p = match i {
                        0 => 1.0,
                        1 => x,
                        _ => {
                            let k = i as f64;
                            let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                            p0 = p1;
                            p1 = p2;
                            p2
                        }
                    };
                    *slot = sqrt(2.0 * i as f64 + 1.0) * p;
                }
            }
            BasisFamily::Chebyshev1 | BasisFamily::Jacobi { .. } => {
                raw_polynomials(self.family, 2.0 * t - 1.0, &mut out[..n]);
                for (v, s) in out[..n].iter_mut().zip(&self.inv_norms) {
                    *v *= s;
                }
            }
            BasisFamily::Daubechies { fine_level, .. } => {
                let tab = self.table.as_ref().expect("wavelet table");
                for (k, slot) in out.iter_mut().enumerate().take(n) {
                    *slot = tab.periodized(fine_level, k, t);
                }
            }
        }
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.count];
        self.fill(t, &mut out);
        out
    }
}

/// Unnormalized Jacobi / Chebyshev polynomials at `x ∈ [-1, 1]`, degrees `0..out.len()`.
fn raw_polynomials(family: BasisFamily, x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    match family {
        BasisFamily::Chebyshev1 => {
            out[0] = 1.0;
            if n > 1 {
                out[1] = x;
            }
            for k in 2..n {
                out[k] = 2.0 * x * out[k - 1] - out[k - 2];
            }
        }
        BasisFamily::Jacobi { alpha: a, beta: b } => {
            out[0] = 1.0;
            if n > 1 {
                out[1] = (a + 1.0) + 0.5 * (a + b + 2.0) * (x - 1.0);
            }
            for k in 2..n {
                let kf = k as f64;
                let s = 2.0 * kf + a + b;
                let c1 = 2.0 * kf * (kf + a + b) * (s - 2.0);
                let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
                let c3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
                out[k] = (c2 * out[k - 1] - c3 * out[k - 2]) / c1;
            }
        }
        _ => unreachable!("raw_polynomials only serves Jacobi-type families"),
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "t",
            value: t,
            domain: "[0, 1]",
        })
    }
}

/// Sieve configuration: bases for time and space, the space mapping, the
/// truncation orders `c` (time) and `d` (space), and the number `r` of
/// regression functions.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SieveSpec {
    pub time_family: BasisFamily,
    pub space_family: BasisFamily,
    pub mapping: Mapping,
    pub c: usize,
    pub d: usize,
    pub r: usize,
}

impl SieveSpec {
    pub fn validate(&self) -> Result<()> {
        self.time_family.validate()?;
        self.space_family.validate()?;
        self.mapping.validate()?;
        if self.c == 0 || self.d == 0 || self.r == 0 {
            return Err(Error::config(alloc::format!(
                "c, d, r must all be at least 1 (c = {}, d = {}, r = {})",
                self.c,
                self.d,
                self.r
            )));
        }
        if self.c > self.time_family.capacity() {
            return Err(Error::config(alloc::format!(
                "c = {} exceeds the {} time functions available",
                self.c,
                self.time_family.capacity()
            )));
        }
        if self.d > self.space_family.capacity() {
            return Err(Error::config(alloc::format!(
                "d = {} exceeds the {} space functions available",
                self.d,
                self.space_family.capacity()
            )));
        }
        self.r
            .checked_mul(self.c)
            .and_then(|v| v.checked_mul(self.d))
            .ok_or_else(|| Error::config("r·c·d overflows"))?;
        Ok(())
    }

    /// Number of coefficients `p = r·c·d`.
    pub fn p(&self) -> usize {
        self.r * self.c * self.d
    }

    pub fn index_map(&self) -> IndexMap {
        IndexMap::new(self.r, self.c, self.d)
    }

    /// Copy with new orders, resizing wavelet families to fit.
    pub fn with_orders(&self, c: usize, d: usize) -> SieveSpec {
        SieveSpec {
            time_family: self.time_family.with_capacity_for(c),
            space_family: self.space_family.with_capacity_for(d),
            c,
            d,
            ..*self
        }
    }
}

/// Ready-to-evaluate tensor basis for a [`SieveSpec`].
#[derive(Clone, Debug)]
pub struct SieveBasis {
    spec: SieveSpec,
    time: Basis1d,
    space: Basis1d,
}

impl SieveBasis {
    pub fn new(spec: SieveSpec) -> Result<Self> {
        spec.validate()?;
        Ok(SieveBasis {
            spec,
            time: Basis1d::new(spec.time_family, spec.c)?,
            space: Basis1d::new(spec.space_family, spec.d)?,
        })
    }

    pub fn spec(&self) -> &SieveSpec {
        &self.spec
    }

    pub fn time(&self) -> &Basis1d {
        &self.time
    }

    pub fn space(&self) -> &Basis1d {
        &self.space
    }

    /// `a(t) = (φ_1(t), …, φ_c(t))`.
    pub fn time_values(&self, t: f64, out: &mut [f64]) -> Result<()> {
        check_unit(t)?;
        self.time.fill(t, out);
        Ok(())
    }

    /// `(ϕ_1(x), …, ϕ_d(x))` with `ϕ_j = φ_j ∘ y`.
    pub fn space_values(&self, x: f64, out: &mut [f64]) -> Result<()> {
        let y = self.spec.mapping.to_unit(x)?;
        self.space.fill(y, out);
        Ok(())
    }

    /// Space functions evaluated directly in transformed coordinates `ỹ ∈ [0, 1]`.
    pub fn space_values_unit(&self, y: f64, out: &mut [f64]) -> Result<()> {
        check_unit(y)?;
        self.space.fill(y, out);
        Ok(())
    }

    /// `√(dy/dx) · ϕ_j(x)`, the weighted variant that is orthonormal in `L²(ℝ)`.
    /// Provided for completeness; estimation uses the unweighted functions.
    pub fn space_values_weighted(&self, x: f64, out: &mut [f64]) -> Result<()> {
        let w = sqrt(self.spec.mapping.jacobian(x)?);
        self.space_values(x, out)?;
        for v in out.iter_mut() {
            *v *= w;
        }
        Ok(())
    }

    /// Tensor vector of length `c·d`, slot `(l1 − 1)·d + l2` holding `φ_{l1}(t) ϕ_{l2}(x)`.
    pub fn tensor(&self, t: f64, x: f64) -> Result<Vec<f64>> {
        let mut a = vec![0.0; self.spec.c];
        let mut phi = vec![0.0; self.spec.d];
        self.time_values(t, &mut a)?;
        self.space_values(x, &mut phi)?;
        Ok(outer(&a, &phi))
    }

    /// Tensor vector in transformed coordinates `(t, ỹ)`.
    pub fn tensor_unit(&self, t: f64, y: f64) -> Result<Vec<f64>> {
        let mut a = vec![0.0; self.spec.c];
        let mut phi = vec![0.0; self.spec.d];
        self.time_values(t, &mut a)?;
        self.space_values_unit(y, &mut phi)?;
        Ok(outer(&a, &phi))
    }
}

/// Row-major outer product `a ⊗ b`.
pub(crate) fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ai in a {
        for &bj in b {
            out.push(ai * bj);
        }
    }
    out
}

/// `φ_index(t)` for a standalone family.
pub fn eval_time_basis(family: BasisFamily, index: usize, t: f64) -> Result<f64> {
    if index == 0 || index > family.capacity() {
        return Err(Error::IndexOutOfRange {
            index,
            capacity: family.capacity(),
        });
    }
    Basis1d::new(family, index)?.eval(index, t)
}

pub fn map_to_unit(mapping: &Mapping, x: f64) -> Result<f64> {
    mapping.to_unit(x)
}

pub fn map_from_unit(mapping: &Mapping, y: f64) -> Result<f64> {
    mapping.from_unit(y)
}

/// `ϕ_index(x) = φ_index(y(x))` using the spec's space family and mapping.
pub fn eval_space_basis(spec: &SieveSpec, index: usize, x: f64) -> Result<f64> {
    let fam = spec.space_family;
    if index == 0 || index > fam.capacity() {
        return Err(Error::IndexOutOfRange {
            index,
            capacity: fam.capacity(),
        });
    }
    let y = spec.mapping.to_unit(x)?;
    Basis1d::new(fam, index)?.eval(index, y)
}

pub fn eval_tensor_basis(spec: &SieveSpec, t: f64, x: f64) -> Result<Vec<f64>> {
    SieveBasis::new(*spec)?.tensor(t, x)
}

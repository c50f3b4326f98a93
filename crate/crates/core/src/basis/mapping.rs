use crate::error::{Error, Result};
use crate::math::{exp, hypot, ln, sqrt, tanh};

/// Shape of the monotone map from the covariate domain onto the unit interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MappingKind {
    /// Covariate already lives in `[0, 1]`.
    Identity,
    /// `u = x / sqrt(x² + s²)` on the real line.
    AlgebraicR,
    /// `u = tanh(x / s)` on the real line.
    LogarithmicR,
    /// `u = (x − s) / (x + s)` on the positive half-line.
    AlgebraicRPlus,
    /// `u = 2 tanh(x / s) − 1` on the positive half-line.
    LogarithmicRPlus,
}

/// A domain mapping `y(x) = (u(x; s) + 1) / 2` with scale `s > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mapping {
    pub kind: MappingKind,
    pub scale: f64,
}

impl Mapping {
    pub fn new(kind: MappingKind, scale: f64) -> Result<Self> {
        let m = Mapping { kind, scale };
        m.validate()?;
        Ok(m)
    }

    pub fn identity() -> Self {
        Mapping {
            kind: MappingKind::Identity,
            scale: 1.0,
        }
    }

    pub fn algebraic(scale: f64) -> Result<Self> {
        Mapping::new(MappingKind::AlgebraicR, scale)
    }

    pub fn logarithmic(scale: f64) -> Result<Self> {
        Mapping::new(MappingKind::LogarithmicR, scale)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::config(alloc::format!(
                "mapping scale must be a positive finite number, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// Whether `x` belongs to the mapping's domain.
    pub fn contains(&self, x: f64) -> bool {
        match self.kind {
            MappingKind::Identity => (0.0..=1.0).contains(&x),
            MappingKind::AlgebraicR | MappingKind::LogarithmicR => x.is_finite(),
            MappingKind::AlgebraicRPlus | MappingKind::LogarithmicRPlus => {
                x.is_finite() && x > 0.0
            }
        }
    }

    /// `y(x) ∈ (0, 1)`; the identity map accepts the closed interval.
    pub fn to_unit(&self, x: f64) -> Result<f64> {
        let s = self.scale;
        let domain_err = |domain| Error::Domain {
            what: "x",
            value: x,
            domain,
        };
        let y = match self.kind {
            MappingKind::Identity => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(domain_err("[0, 1]"));
                }
                return Ok(x);
            }
            MappingKind::AlgebraicR => {
                if !x.is_finite() {
                    return Err(domain_err("the real line"));
                }
                let r = hypot(x, s);
                if x >= 0.0 {
                    0.5 * (1.0 + x / r)
                } else {
                    // 1 + x/r without cancellation
                    s / r * s / (2.0 * (r - x))
                }
            }
            MappingKind::LogarithmicR => {
                if !x.is_finite() {
                    return Err(domain_err("the real line"));
                }
                // (1 + tanh(z)) / 2 is the logistic function at 2z
                1.0 / (1.0 + exp(-2.0 * x / s))
            }
            MappingKind::AlgebraicRPlus => {
                if !(x > 0.0) || !x.is_finite() {
                    return Err(domain_err("(0, inf)"));
                }
                x / (x + s)
            }
            MappingKind::LogarithmicRPlus => {
                if !(x > 0.0) || !x.is_finite() {
                    return Err(domain_err("(0, inf)"));
                }
                tanh(x / s)
            }
        };
        if y > 0.0 && y < 1.0 {
            Ok(y)
        } else {
            // the image collapsed onto an endpoint in floating point
            Err(domain_err("the representable range of the mapping"))
        }
    }

    /// Inverse of [`Mapping::to_unit`], `x = g(2y − 1; s)`.
    pub fn from_unit(&self, y: f64) -> Result<f64> {
        let s = self.scale;
        if self.kind == MappingKind::Identity {
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::Domain {
                    what: "y",
                    value: y,
                    domain: "[0, 1]",
                });
            }
            return Ok(y);
        }
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::Domain {
                what: "y",
                value: y,
                domain: "(0, 1)",
            });
        }
        let one_minus = 1.0 - y;
        Ok(match self.kind {
            MappingKind::Identity => unreachable!(),
            // s u / sqrt(1 − u²) with 1 − u² = 4 y (1 − y)
            MappingKind::AlgebraicR => s * (y - one_minus) / (2.0 * sqrt(y * one_minus)),
            MappingKind::LogarithmicR => 0.5 * s * ln(y / one_minus),
            MappingKind::AlgebraicRPlus => s * y / one_minus,
            MappingKind::LogarithmicRPlus => 0.5 * s * ln((1.0 + y) / one_minus),
        })
    }

    /// `dy/dx`, used by the optional square-root-Jacobian weighting.
    pub fn jacobian(&self, x: f64) -> Result<f64> {
        let s = self.scale;
        let y = self.to_unit(x)?;
        Ok(match self.kind {
            MappingKind::Identity => 1.0,
            MappingKind::AlgebraicR => {
                let r = hypot(x, s);
                s * s / (2.0 * r * r * r)
            }
            MappingKind::LogarithmicR => 2.0 / s * y * (1.0 - y),
            MappingKind::AlgebraicRPlus => s / ((x + s) * (x + s)),
            MappingKind::LogarithmicRPlus => (1.0 - y * y) / s,
        })
    }
}

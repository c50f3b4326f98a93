//! Sieve and bootstrap settings: command-line flags, an optional JSON config
//! file, and defaults derived from the data.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sieve_lab_core::{
    select_m, BasisFamily, BootstrapConfig, FitResult, Mapping, MappingKind, Observations,
    SieveSpec, TuneGrid,
};

use crate::error::{CliError, CliResult};

pub const DEFAULT_C: usize = 4;
pub const DEFAULT_D: usize = 6;

/// Parses `fourier`, `legendre`, `chebyshev`, `jacobi:α,β` or `db<N>`.
pub fn parse_family(name: &str) -> CliResult<BasisFamily> {
    let lower = name.trim().to_ascii_lowercase();
    let family = match lower.as_str() {
        "fourier" => BasisFamily::Fourier,
        "legendre" => BasisFamily::Legendre,
        "chebyshev" | "chebyshev1" => BasisFamily::Chebyshev1,
        other => {
            if let Some(params) = other.strip_prefix("jacobi:") {
                let (a, b) = params
                    .split_once(',')
                    .ok_or_else(|| CliError::config(format!("'{name}': expected jacobi:α,β")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::config(format!("'{name}': bad Jacobi parameter '{v}'")))
                };
                BasisFamily::Jacobi {
                    alpha: parse(a)?,
                    beta: parse(b)?,
                }
            } else if let Some(order) = other
                .strip_prefix("daubechies")
                .or_else(|| other.strip_prefix("db"))
            {
                let order = order
                    .trim_start_matches(['-', '_'])
                    .parse::<usize>()
                    .map_err(|_| CliError::config(format!("'{name}': bad Daubechies order")))?;
                BasisFamily::daubechies(order, 1)
            } else {
                return Err(CliError::config(format!(
                    "unknown basis family '{name}' (expected fourier, legendre, chebyshev, jacobi:α,β or db<N>)"
                )));
            }
        }
    };
    family.validate()?;
    Ok(family)
}

pub fn family_name(family: &BasisFamily) -> String {
    match *family {
        BasisFamily::Fourier => "fourier".into(),
        BasisFamily::Legendre => "legendre".into(),
        BasisFamily::Chebyshev1 => "chebyshev".into(),
        BasisFamily::Jacobi { alpha, beta } => format!("jacobi:{alpha},{beta}"),
        BasisFamily::Daubechies { order, .. } => format!("db{order}"),
    }
}

pub fn parse_mapping_kind(name: &str) -> CliResult<MappingKind> {
    match name.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "identity" => Ok(MappingKind::Identity),
        "algebraic" | "algebraic-r" => Ok(MappingKind::AlgebraicR),
        "logarithmic" | "log" | "logarithmic-r" => Ok(MappingKind::LogarithmicR),
        "algebraic-plus" | "algebraic-r-plus" => Ok(MappingKind::AlgebraicRPlus),
        "logarithmic-plus" | "log-plus" | "logarithmic-r-plus" => Ok(MappingKind::LogarithmicRPlus),
        _ => Err(CliError::config(format!(
            "unknown mapping '{name}' (expected identity, algebraic, logarithmic, algebraic-plus or logarithmic-plus)"
        ))),
    }
}

pub fn mapping_name(kind: MappingKind) -> &'static str {
    match kind {
        MappingKind::Identity => "identity",
        MappingKind::AlgebraicR => "algebraic",
        MappingKind::LogarithmicR => "logarithmic",
        MappingKind::AlgebraicRPlus => "algebraic-plus",
        MappingKind::LogarithmicRPlus => "logarithmic-plus",
    }
}

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub time_family: Option<String>,
    pub space_family: Option<String>,
    pub mapping: Option<String>,
    pub s: Option<f64>,
    pub c: Option<usize>,
    pub d: Option<usize>,
    pub r: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &PathBuf) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn from_spec(spec: &SieveSpec) -> Self {
        ConfigFile {
            time_family: Some(family_name(&spec.time_family)),
            space_family: Some(family_name(&spec.space_family)),
            mapping: Some(mapping_name(spec.mapping.kind).into()),
            s: Some(spec.mapping.scale),
            c: Some(spec.c),
            d: Some(spec.d),
            r: Some(spec.r),
        }
    }
}

/// Sieve flags shared by `tune`, `fit`, `scr` and `test`.
#[derive(Args, Clone, Debug, Default)]
pub struct SpecArgs {
    /// JSON file with any of time_family, space_family, mapping, s, c, d, r.
    /// Flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Time basis: fourier, legendre, chebyshev, jacobi:α,β or db<N>.
    #[arg(long = "time-basis")]
    pub time_basis: Option<String>,
    /// Space basis, same names as --time-basis.
    #[arg(long = "space-basis")]
    pub space_basis: Option<String>,
    /// Covariate mapping: identity, algebraic, logarithmic, algebraic-plus or logarithmic-plus.
    #[arg(long)]
    pub mapping: Option<String>,
    /// Mapping scale s [default: sample standard deviation of the covariates].
    #[arg(long)]
    pub scale: Option<f64>,
    /// Number of time basis functions.
    #[arg(long = "c")]
    pub c: Option<usize>,
    /// Number of space basis functions.
    #[arg(long = "d")]
    pub d: Option<usize>,
    /// Number of lags (series input) or covariates (panel input).
    #[arg(long = "r")]
    pub r: Option<usize>,
}

impl SpecArgs {
    /// Combines flags, the config file and data-driven defaults.
    pub fn resolve(&self, obs: &Observations) -> CliResult<SieveSpec> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let pick = |flag: &Option<String>, key: &Option<String>| flag.clone().or_else(|| key.clone());
        let time_family = match pick(&self.time_basis, &file.time_family) {
            Some(n) => parse_family(&n)?,
            None => BasisFamily::Fourier,
        };
        let space_family = match pick(&self.space_basis, &file.space_family) {
            Some(n) => parse_family(&n)?,
            None => BasisFamily::Fourier,
        };
        let kind = match pick(&self.mapping, &file.mapping) {
            Some(n) => parse_mapping_kind(&n)?,
            None => MappingKind::AlgebraicR,
        };
        let scale = match self.scale.or(file.s) {
            Some(s) => s,
            None if kind == MappingKind::Identity => 1.0,
            None => {
                let sd = obs.covariate_sd();
                if !(sd > 0.0 && sd.is_finite()) {
                    return Err(CliError::data(
                        "covariates have zero spread; pass --scale to fix the mapping scale",
                    ));
                }
                sd
            }
        };
        let r = match self.r.or(file.r) {
            Some(r) => r,
            None if obs.is_lagged() => 1,
            None => obs.covariates().len(),
        };
        let c = self.c.or(file.c).unwrap_or(DEFAULT_C);
        let d = self.d.or(file.d).unwrap_or(DEFAULT_D);
        let spec = SieveSpec {
            time_family,
            space_family,
            mapping: Mapping::new(kind, scale)?,
            c,
            d,
            r,
        }
        .with_orders(c, d);
        spec.validate()?;
        Ok(spec)
    }
}

/// Multiplier-bootstrap flags shared by `scr` and `test`.
#[derive(Args, Clone, Debug)]
pub struct BootArgs {
    /// Block size, or `auto` for the minimum-volatility choice.
    #[arg(long = "m", default_value = "auto")]
    pub m: String,
    /// Draws for the pointwise standard deviation and the quadratic-form null.
    #[arg(long = "B", default_value_t = 1000)]
    pub b_reps: usize,
    /// Draws of the sup statistic.
    #[arg(long = "M", default_value_t = 1000)]
    pub m_reps: usize,
    /// Grid points in t.
    #[arg(long = "grid-t", default_value_t = 100)]
    pub grid_t: usize,
    /// Grid points in the mapped covariate.
    #[arg(long = "grid-y", default_value_t = 100)]
    pub grid_y: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Lower end of the covariate range covered by the region.
    #[arg(long = "x-lo", allow_negative_numbers = true, requires = "x_hi")]
    pub x_lo: Option<f64>,
    /// Upper end of the covariate range covered by the region.
    #[arg(long = "x-hi", allow_negative_numbers = true, requires = "x_lo")]
    pub x_hi: Option<f64>,
}

impl BootArgs {
    pub fn resolve(&self, fit: &FitResult, obs: &Observations) -> CliResult<BootstrapConfig> {
        let m = match self.m.as_str() {
            "auto" => select_m(fit, obs, &TuneGrid::default_for(obs.len()))?.m,
            v => v
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("--m must be 'auto' or an integer, got '{v}'")))?,
        };
        let cfg = BootstrapConfig {
            m,
            b_reps: self.b_reps,
            m_reps: self.m_reps,
            grid_t: self.grid_t,
            grid_y: self.grid_y,
            seed: self.seed,
            alpha: self.alpha,
            x_range: self.x_lo.zip(self.x_hi),
        };
        cfg.validate(obs.len(), fit.spec().r)?;
        Ok(cfg)
    }
}

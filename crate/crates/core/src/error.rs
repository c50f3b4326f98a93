use alloc::string::String;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("basis index {index} out of range (capacity {capacity})")]
    IndexOutOfRange { index: usize, capacity: usize },
    #[error("under-determined design: {rows} rows for {cols} coefficients")]
    UnderDetermined { rows: usize, cols: usize },
    #[error("non-finite data at row {row}")]
    NonFiniteData { row: usize },
    #[error("non-finite value generated at step {step}")]
    NonFiniteStep { step: usize },
    #[error("singular design: numerical rank {rank} < {cols} (condition estimate {condition:e})")]
    SingularDesign {
        rank: usize,
        cols: usize,
        condition: f64,
    },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("degenerate bootstrap variance at grid point (t = {t}, x = {x})")]
    DegenerateVariance { t: f64, x: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("tuning failed: {0}")]
    Tuning(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::IndexOutOfRange { .. } | Error::Dimension(_) => {
                ErrorKind::Config
            }
            Error::UnderDetermined { .. } => ErrorKind::Config,
            Error::Domain { .. } | Error::NonFiniteData { .. } => ErrorKind::Data,
            Error::NonFiniteStep { .. }
            | Error::SingularDesign { .. }
            | Error::NotPositiveDefinite
            | Error::DegenerateVariance { .. }
            | Error::Tuning(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;

//! Mapped-sieve least squares for time-varying nonlinear regression of
//! locally stationary time series, with multiplier-bootstrap inference.
//!
//! The model is
//!
//! ```text
//! Y_i = sum_{j=1..r} m_j(i/n, X_{j,i}) + eps_i
//! ```
//!
//! where `X_{j,i}` is either the lagged response `Y_{i-j}` (autoregressive
//! case) or an exogenous locally stationary covariate (panel case). Each
//! `m_j(t, x)` is expanded in a tensor basis `phi_l1(t) * varphi_l2(x)` where
//! the space factor is a `[0,1]` basis composed with a monotone map of the real
//! line onto the unit interval.
//!
//! The crate is `no_std` with `alloc`. Enable the `parallel` feature to run
//! bootstrap replications on a rayon pool; results are bitwise identical to the
//! sequential path because every replication owns its random stream.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately treats NaN as invalid
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(any(test, feature = "parallel"))]
extern crate std;

pub mod basis;
mod error;
pub mod estimate;
pub mod inference;
pub mod linalg;
mod math;
mod par;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod tuning;

pub use basis::{
    eval_space_basis, eval_tensor_basis, eval_time_basis, map_from_unit, map_to_unit, Basis1d,
    BasisFamily, Mapping, MappingKind, SieveBasis, SieveSpec,
};
pub use error::{Error, ErrorKind, Result};
pub use estimate::{
    build_design, fit, ols_fit, predict_m, regressor_vector, DesignMatrix, FitResult, IndexMap,
    Observations,
};
pub use inference::{
    compute_b_matrix, draw_xi, scr, t1_draw, test_exact_form, test_exact_form_joint,
    test_separability, test_stationarity, BootstrapConfig, ScrResult, TestKind, TestResult,
};
pub use simulate::{
    gen_case2_panel, gen_error_process, gen_regression_series, simulate_series, Coefficient, ErrorProcessKind,
    ErrorProcessSpec, RegressionModelSpec,
};
pub use tuning::{omega_hat, select_cd, select_m, TuneGrid};

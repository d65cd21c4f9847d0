//! Special functions and root-finding primitives used by the analytic modules.
//!
//! Everything here is a pure function of its arguments.

mod beta;
mod gamma;
mod lambert;
mod quadrature;
mod roots;

pub use beta::{incomplete_beta_regularized, ln_beta, ln_incomplete_beta_regularized};
pub use gamma::{
    erf, erfc, ln_erfc, ln_erfcx, ln_gamma, ln_lower_incomplete_gamma_regularized, ln_normal_cdf,
    ln_upper_incomplete_gamma_regularized, log_gamma, lower_incomplete_gamma_regularized, normal_cdf,
    upper_incomplete_gamma_regularized,
};
pub use lambert::{lambert_w0, lambert_w_minus1};
pub use quadrature::{adaptive_quadrature, adaptive_quadrature_with_limit, DEFAULT_MAX_SUBDIVISIONS};
pub use roots::{solve_scalar, solve_scalar_with_limit, BracketedRoot, DEFAULT_MAX_ITERATIONS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("argument {value} is outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("non-finite function value at {at}")]
    NonFinite { at: f64 },

    #[error("{routine} did not converge within {limit} steps")]
    NonConvergence { routine: &'static str, limit: usize },
}

pub(crate) fn domain<T: crate::Scalar>(function: &'static str, value: T) -> NumericsError {
    NumericsError::Domain { function, value: value.as_f64() }
}

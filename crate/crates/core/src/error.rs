use thiserror::Error;

use crate::numerics::NumericsError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("truncation at cutoff {cutoff} leaves no probability mass")]
    ZeroMass { cutoff: f64 },

    #[error("base s_n / E[W~] = {base} must exceed 1")]
    DegenerateBase { base: f64 },

    #[error("could not bracket the fixed point: {0}")]
    BracketFailure(String),

    #[error("fixed-point iteration diverged after {iterations} steps (last change {last_change})")]
    IterationDivergence { iterations: usize, last_change: f64 },

    #[error("formula outside asymptotic regime: {0}")]
    OutsideRegime(String),

    #[error("graph with {n} vertices exceeds the limit of {limit} for {operation}")]
    SizeLimit { operation: &'static str, n: usize, limit: usize },

    #[error("clique search exceeded its node budget of {budget}")]
    BudgetExceeded { budget: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::invalid(name, reason)
}

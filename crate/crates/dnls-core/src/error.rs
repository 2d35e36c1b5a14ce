use thiserror::Error;

/// Errors raised by the grid, model, integrator, diagnostics and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("query point {x} outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NumericOverflow { t: f64 },

    #[error("step size {dt:e} fell below dt_min at t = {t} (max |u| = {max_modulus:e})")]
    StepUnderflow { t: f64, dt: f64, max_modulus: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no event found: {0}")]
    NoEvent(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

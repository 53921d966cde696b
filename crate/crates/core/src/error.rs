use thiserror::Error;

/// Errors raised by the solver and its verification harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("unsupported spatial dimension {0} (supported: 1..=3)")]
    UnsupportedDimension(usize),

    #[error("quadrature did not converge: achieved error estimate {achieved:e} > tolerance {tolerance:e}")]
    QuadratureNotConverged { achieved: f64, tolerance: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("vector field returned a non-finite value at node {node} (x = {x:?})")]
    FieldNonFinite { node: usize, x: Vec<f64> },

    #[error("time step failed at t = {t}: dt fell below dt_min = {dt_min:e}, last residual {residual:e}")]
    StepFailed { t: f64, dt_min: f64, residual: f64 },

    #[error("non-finite norm at time slice {index} (t = {t})")]
    NonFiniteNorm { index: usize, t: f64 },

    #[error("precondition audit failed: {0}")]
    Audit(String),

    #[error("expression error: {0}")]
    Expr(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid datum: {0}")]
    InvalidDatum(String),

    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("Riesz constant undefined for d = {dim}, exponent = {exponent}")]
    ConstantUndefined { dim: usize, exponent: f64 },

    #[error("quadrature did not reach relative tolerance {requested:e} (achieved {achieved:e})")]
    QuadratureFailure { requested: f64, achieved: f64 },

    #[error("singular system (reciprocal pivot ratio {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("grid of {cells} cells per axis exceeds the limit of {limit}")]
    SizeGuard { cells: usize, limit: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("point {x} outside the open domain (-{half_width}, {half_width})")]
    OutOfDomain { x: f64, half_width: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

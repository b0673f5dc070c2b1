use thiserror::Error;

/// Errors produced by the steady-state machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no bracket: {0}")]
    Bracket(String),

    #[error("numerical failure in {what}: achieved tolerance {achieved:e}")]
    Numeric { what: String, achieved: f64 },

    #[error("structural assumption violated: {0}")]
    Structural(String),

    #[error("uniqueness violation: {0}")]
    Uniqueness(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("newton iteration did not converge after {iterations} iterations (last residual {last:e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

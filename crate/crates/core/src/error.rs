use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integrand is not integrable near {endpoint}: exponent {exponent} (need > {bound})")]
    Integrability {
        endpoint: f64,
        exponent: f64,
        bound: f64,
    },
    #[error("non-finite value {value} at x = {x} ({context})")]
    Singularity { x: f64, value: f64, context: String },
    #[error("nodes {a} and {b} coincide within {tol:e}")]
    DegenerateNodes { a: f64, b: f64, tol: f64 },
    #[error("derivative of order {order} unavailable at {x}: {reason}")]
    DerivativeUnavailable { order: usize, x: f64, reason: String },
    #[error("solver stalled: {0}")]
    SolverStall(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParamRange {
        name: String,
        value: f64,
        reason: String,
    },
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),
    #[error("division by vanishing norm: {0}")]
    Division(String),
    #[error("degenerate evaluation: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &str, value: f64, reason: impl Into<String>) -> Self {
        Error::ParamRange {
            name: name.to_string(),
            value,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model parameter lies outside the range the routine supports.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An argument lies outside the domain of the evaluated function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are inconsistent in shape or violate a structural hypothesis.
    #[error("validation error: {0}")]
    Validation(String),

    /// A fixed-point iteration left the admissible ball or failed to settle.
    #[error("divergence after {iterations} iterations: {reason}")]
    Divergence { iterations: usize, reason: String },

    /// A non-finite value appeared while evaluating the nonlinearity.
    #[error("blow-up at time node {node} (t = {time}) in iteration {iteration}")]
    BlowUp {
        iteration: usize,
        node: usize,
        time: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check(cond: bool, err: impl FnOnce() -> Error) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err())
    }
}

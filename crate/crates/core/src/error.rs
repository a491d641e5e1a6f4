use thiserror::Error;

use crate::gem::ProjectionResult;

/// Errors raised by the QP, solver, projection and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("C not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric: max |C - C^T| = {max_asymmetry:e}")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certificate precondition violated at index {index}: {reason}")]
    Certificate { index: usize, reason: &'static str },

    #[error("problem too large for exhaustive enumeration: m = {m} (limit {limit})")]
    TooLarge { m: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dual solver stopped after {} iterations without converging (kkt residual {:e})", .0.iterations, .0.kkt_residual)]
    NotConverged(Box<ProjectionResult>),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, found })
    }
}

pub(crate) fn check_finite(context: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by validation, parsing, and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An object failed an invariant check (normalization, shape, range).
    #[error("validation: {0}")]
    Validation(String),

    /// A scalar argument lies outside its mathematical domain.
    #[error("domain: {0}")]
    Domain(String),

    /// Vector or matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A spec document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// An iterative routine hit its iteration cap; carries the last iterate.
    #[error("no convergence after {iterations} iterations (last iterate {last})")]
    NonConverged { iterations: usize, last: f64 },

    /// A computation was refused because it would exceed a cost guard.
    #[error("guard exceeded: {0}")]
    Guard(String),

    /// A precondition of the requested operation does not hold.
    #[error("precondition: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

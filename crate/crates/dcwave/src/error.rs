//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by the numerical routines.
///
/// Each variant corresponds to one failure class of the command-line exit
/// code contract: [`Error::Domain`] and [`Error::Range`] are caller errors,
/// [`Error::Accuracy`] means a method could not reach its target, and
/// [`Error::Verification`] / [`Error::Divergence`] mean a property check
/// failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the documented domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The result cannot be represented (overflow in log space).
    #[error("range error: {0}")]
    Range(String),
    /// An iterative or adaptive method did not reach its tolerance.
    #[error("accuracy error in {what}: achieved error bound {achieved:e}")]
    Accuracy { what: String, achieved: f64 },
    /// A verification assertion failed.
    #[error("verification failure: {0}")]
    Verification(String),
    /// A dyadic summation diverges because an admissibility inequality fails.
    #[error("divergence: {0}")]
    Divergence(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn accuracy(what: impl Into<String>, achieved: f64) -> Self {
        Error::Accuracy {
            what: what.into(),
            achieved,
        }
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

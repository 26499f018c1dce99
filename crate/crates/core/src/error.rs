//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("iteration diverged at step {iteration}")]
    Diverged {
        iteration: usize,
        trace: Box<crate::solvers::SolverTrace>,
    },

    #[error("constraint system is inconsistent (residual {residual:e})")]
    InconsistentConstraints { residual: f64 },

    #[error("unexpected rank deficiency: {0}")]
    RankDeficiencyUnexpected(String),

    #[error("no certifiable epsilon in [{lo:e}, {hi:e}]")]
    NoCertifiableEpsilon { lo: f64, hi: f64 },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

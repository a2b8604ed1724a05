use thiserror::Error;

use crate::fit::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model evaluated to a physically meaningless value (e.g. a negative width).
    #[error("model validity error: {0}")]
    ModelValidity(String),

    /// A requested frequency shift cannot be produced inside the valid bias range.
    #[error("unreachable target: {0}")]
    Unreachable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The optimizer stopped without meeting its convergence criteria. The best
    /// parameter set found so far is attached for diagnostics.
    #[error("fit did not converge: {reason}")]
    NonConvergence { reason: String, best: Box<FitResult> },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors raised by the optimizer rather than by bad input.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

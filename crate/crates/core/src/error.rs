use thiserror::Error;

/// Errors raised by the channel model and its estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two endpoints coincide or an angle leaves its domain.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

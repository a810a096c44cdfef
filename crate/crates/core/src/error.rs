use thiserror::Error;

/// Errors raised by the library.
///
/// Invalid inputs (malformed profiles, bad parameters) are separated from
/// numerical non-convergence so that callers can map them to different exit
/// codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("non-convergence in {what}: {detail}")]
    NonConvergence { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn no_conv(what: &'static str, detail: impl Into<String>) -> Self {
        Error::NonConvergence {
            what,
            detail: detail.into(),
        }
    }

    /// True for errors caused by numerical non-convergence rather than bad input.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::lattice::CvpResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-domain input.
    #[error("input error: {0}")]
    Input(String),

    /// Text format error, with a 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An exhaustive search would exceed its configured cap.
    #[error("resource limit exceeded: {message}")]
    Resource {
        message: String,
        /// Best point found before the cap was hit, when the search had started.
        partial: Option<Box<CvpResult>>,
    },

    /// A lemma that must hold on every input was observed to fail.
    #[error("lemma violation: {0}")]
    LemmaViolation(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource {
            message: msg.into(),
            partial: None,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

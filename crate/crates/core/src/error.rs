use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed text input. `line` is 1-based; 0 means "no specific line".
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid orbital space: {0}")]
    Space(String),

    #[error("RDM validation failed: {0}")]
    Validation(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("propagation produced a non-finite energy at iteration {iteration}")]
    NonFinite {
        iteration: usize,
        /// Result assembled from the last finite iterate.
        last: Box<crate::solver::AcseResult>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

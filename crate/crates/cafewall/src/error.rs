use std::path::PathBuf;

/// Errors produced by stimulus generation, filtering, and analysis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates a documented invariant; the message names it.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A geometric quantity falls outside its valid range (window out of
    /// bounds, kernel larger than the padded image, travel overrun, ...).
    #[error("out of range: {0}")]
    Range(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Codec { path: PathBuf, message: String },
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

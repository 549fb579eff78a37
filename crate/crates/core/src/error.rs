//! Error type shared by every module in the toolkit.

use std::io;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// File could not be opened, read or written.
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    /// Input bytes are not valid UTF-8.
    #[error("decode: {path}:{line}: invalid UTF-8")]
    InvalidUtf8 { path: String, line: usize },

    /// A structured text file (ARPA, phrase table, config, ...) is malformed.
    #[error("parse: {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Inputs violate a documented precondition (sizes, ranges, emptiness).
    #[error("validation: {0}")]
    Validation(String),

    /// The beam search could not reach a full-coverage hypothesis.
    #[error("decode failure: no full-coverage hypothesis for sentence: {sentence}")]
    DecodeFailure { sentence: String },

    /// Weight tuning could not proceed (e.g. too many decode failures).
    #[error("tuning: {0}")]
    Tuning(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    /// Process exit code for the CLI: 2 missing/unreadable file, 3 bad
    /// input, 4 decode failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::DecodeFailure { .. } => 4,
            _ => 3,
        }
    }
}

//! Crate-wide error type.
//!
//! Errors split into two exit-code classes: anything caused by the caller's
//! inputs (unreadable files, malformed rows, invalid parameter ranges,
//! mismatched shapes) maps to exit code 2, while violations of internal
//! invariants (non-monotone EM, non-finite likelihoods) map to exit code 3.

use std::io;
use std::path::Path;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read { path: String, source: io::Error },

    #[error("failed to write {path}: {source}")]
    Write { path: String, source: io::Error },

    /// Malformed content in an input file. `context` is the file path when
    /// known, `line` is 1-based.
    #[error("{context}:{line}: {msg}")]
    Parse {
        context: String,
        line: usize,
        msg: String,
    },

    /// Input that parses but is unusable (empty corpus, missing language,
    /// out-of-range parameter, shape mismatch, ...).
    #[error("{0}")]
    InvalidInput(String),

    /// An input corpus with zero sentences. Kept separate from
    /// `InvalidInput` so the tag command can treat it as "nothing to do".
    #[error("{context}: input contains no sentences")]
    EmptyInput { context: String },

    /// A bug: an invariant the library itself is responsible for was broken.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            context: "<input>".to_owned(),
            line,
            msg: msg.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Attach a file path to errors produced while parsing an in-memory
    /// string, so messages point at the real source.
    pub fn with_path(self, path: &Path) -> Self {
        match self {
            Error::Parse { line, msg, .. } => Error::Parse {
                context: path.display().to_string(),
                line,
                msg,
            },
            Error::EmptyInput { .. } => Error::EmptyInput {
                context: path.display().to_string(),
            },
            other => other,
        }
    }

    /// Process exit code for the CLI: 2 for input problems, 3 for internal
    /// invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Read {
        path: path.display().to_string(),
        source,
    })?;
    match String::from_utf8(bytes) {
        Ok(text) => Ok(text),
        Err(err) => {
            let valid = err.utf8_error().valid_up_to();
            let line = err.as_bytes()[..valid]
                .iter()
                .filter(|&&b| b == b'\n')
                .count()
                + 1;
            Err(Error::Parse {
                context: path.display().to_string(),
                line,
                msg: "malformed UTF-8".to_owned(),
            })
        }
    }
}

pub(crate) fn write_string(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|source| Error::Write {
        path: path.display().to_string(),
        source,
    })
}

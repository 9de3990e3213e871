//! Crate-wide error type. Every rejected input maps to one variant with
//! enough context to print a one-line diagnostic.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    #[error("length mismatch: {left} vs {right} ({context})")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: String,
    },

    #[error("exponent p = {p} out of range: {context}")]
    BadExponent { p: f64, context: String },

    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("grid level {level} too coarse: {context}")]
    LevelTooCoarse { level: u32, context: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("process is not adapted; refusing to integrate")]
    NotAdapted,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("embedded assertion failed: {0}")]
    AssertionFailed(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error records a failed embedded experiment assertion
    /// rather than a rejected input.
    pub fn is_assertion(&self) -> bool {
        matches!(self, Error::AssertionFailed(_))
    }
}

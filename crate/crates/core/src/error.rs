//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the compression pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The least-squares system for a fit could not be solved.
    #[error("fit failed on segment {segment}: {reason}")]
    FitFailure { segment: usize, reason: String },

    /// A coefficient does not fit its fixed-point word.
    #[error("{coefficient} = {value} out of range for {bits}-bit representation")]
    Range {
        coefficient: &'static str,
        value: f64,
        bits: u32,
    },

    /// An accumulator left the adder container during decompression.
    #[error("accumulator overflow at segment {segment}, sample {sample}")]
    Overflow { segment: usize, sample: usize },

    /// The state integrator lost unitarity beyond tolerance.
    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    /// Coefficient file does not start with the expected magic bytes.
    #[error("bad magic")]
    BadMagic,

    /// Coefficient file ended before the declared segment data.
    #[error("unexpected end of file at segment {0}")]
    UnexpectedEof(usize),

    /// A stored raw word has bits above `word_bits` that disagree with its sign bit.
    #[error("sign-extension violation in {coefficient} of segment {segment}")]
    SignExtension {
        coefficient: &'static str,
        segment: usize,
    },

    /// Malformed text input (CSV, JSON sidecar).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// DSL syntax error with source position (1-based line and column).
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Structurally invalid network (duplicate species, bad reaction, ...).
    #[error("invalid network: {0}")]
    Network(String),

    /// Invalid value or configuration: negative concentration, zero rate in a
    /// denominator, parameters outside the regime an operation requires.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Field/grid or vector dimension mismatch.
    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    /// Time integration failure (NaN, positivity loss, blow-up).
    #[error("solver failure: {0}")]
    Solver(String),

    /// Underlying I/O failure while reading or writing artifacts.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        Error::Mismatch(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

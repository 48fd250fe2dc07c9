use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("table lookup failed: no beta tabulated for effective range {range} and nu {nu}")]
    Lookup { range: f64, nu: f64 },

    #[error("batch entry {index}: matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { index: usize, pivot: usize },

    #[error("batch entry {index}: triangular factor is singular at row {row}")]
    Singular { index: usize, row: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter point for which the likelihood cannot be evaluated.
    /// `block` is the batch entry that failed (0 is the joint first block).
    #[error("likelihood infeasible at block {block}: {reason}")]
    Infeasible { block: usize, reason: String },

    #[error("dense problem of size {n} exceeds the guard limit {limit}")]
    GuardExceeded { n: usize, limit: usize },

    #[error("regression error: {0}")]
    Regression(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

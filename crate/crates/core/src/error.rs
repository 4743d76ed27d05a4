use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected dim={expected}, got dim={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("{0}")]
    Domain(#[from] DomainViolation),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reference cost is zero; relative error is undefined")]
    ZeroReference,

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

/// First coordinate found outside a divergence's domain box.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("domain violation at row {row}, column {column}: {value} not in [{lower}, {upper}]")]
pub struct DomainViolation {
    pub row: usize,
    pub column: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

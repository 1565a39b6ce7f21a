// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised across ingestion, detection and influence analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input holds {n} observation(s); at least 2 are required")]
    EmptyInput { n: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("column not found: {0}")]
    ColumnNotFound(String),

    #[error("noise variance estimate is degenerate (zero MAD of first differences); supply sigma2 explicitly")]
    DegenerateSeries,

    #[error("series too short: {n} observation(s), need at least {min}")]
    TooShort { n: usize, min: usize },

    #[error("invalid noise variance {0}; must be finite and > 0")]
    InvalidSigma(f64),

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid changepoints: {0}")]
    InvalidChangepoints(String),

    #[error("exhaustive search limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no feasible segmentation with minimum segment length {min_len} for n = {n}")]
    Infeasible { n: usize, min_len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

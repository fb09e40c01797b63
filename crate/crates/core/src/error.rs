use std::path::PathBuf;

use crate::quantize::QuantizedVector;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty vector")]
    EmptyVector,

    #[error("non-finite input at position {0}")]
    NonFinite(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ragged matrix: row {row} has {got} columns, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("divergence: non-finite coefficient at sweep {sweep}, coordinate {coordinate}")]
    Divergence { sweep: usize, coordinate: usize },

    #[error(
        "lambda2 too large: denominator non-positive (2*lambda2 = {twice_lambda2:e} must stay below min column norm^2 = {min_col_norm_sq:e})"
    )]
    Lambda2TooLarge {
        twice_lambda2: f64,
        min_col_norm_sq: f64,
    },

    #[error("singular selected system: support index {0} is a structurally zero column")]
    SingularSupport(usize),

    #[error("non-contiguous cluster assignment at sorted position {0}")]
    NonContiguous(usize),

    #[error("{rounds} rounds exhausted with {levels} levels (> target {target})")]
    RoundsExhausted {
        rounds: usize,
        levels: usize,
        target: usize,
        best: Box<QuantizedVector>,
    },

    #[error(
        "distribution incompatible with range: {accepted} of {wanted} samples after {draws} draws"
    )]
    RejectionFailed {
        accepted: usize,
        wanted: usize,
        draws: usize,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("pgm: {0}")]
    Pgm(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum FermatError {
    #[error("point cloud needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("point cloud needs ambient dimension >= 1")]
    ZeroDimension,
    #[error("coordinate buffer of length {len} is not a multiple of dimension {dim}")]
    RaggedBuffer { len: usize, dim: usize },
    #[error("non-finite coordinate at point {point}, axis {axis}")]
    NonFinite { point: usize, axis: usize },
    #[error("neighbor count k={k} outside [1, {max}]")]
    InvalidK { k: usize, max: usize },
    #[error("graphs have different vertex counts ({0} vs {1})")]
    VertexCountMismatch(usize, usize),
    #[error("vertex {index} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("alpha must be >= 1, got {0}")]
    InvalidAlpha(f64),
    #[error("intrinsic dimension must be >= 1")]
    InvalidIntrinsicDim,
    #[error("graph is disconnected: vertices {0} and {1} have no connecting path")]
    Disconnected(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("matrix has a negative or non-finite entry at ({0}, {1})")]
    InvalidEntry(usize, usize),
    #[error("target dimension p={p} outside [1, {max}]")]
    InvalidTargetDim { p: usize, max: usize },
    #[error("labeled set is empty")]
    EmptyLabeled,
    #[error("invalid labeled set: {0}")]
    InvalidLabels(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("too many duplicate points: {zero} of {n} have a zero nearest-neighbor distance")]
    DuplicatesDominate { zero: usize, n: usize },
    #[error("class {class} has {available} members, {requested} requested")]
    ClassTooSmall {
        class: usize,
        available: usize,
        requested: usize,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}: line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: line {line}: label {value:?} is not a non-negative integer")]
    BadLabel {
        path: PathBuf,
        line: usize,
        value: String,
    },
    #[error("points file has {points} rows but labels file has {labels}")]
    RowCountMismatch { points: usize, labels: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trial {rep} (n_labeled={n_labeled}) failed: {source}")]
    Trial {
        rep: usize,
        n_labeled: usize,
        #[source]
        source: Box<FermatError>,
    },
    #[error("malformed binary matrix: {0}")]
    BadBinary(String),
}

pub type Result<T> = std::result::Result<T, FermatError>;

impl FermatError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FermatError::Io {
            path: path.into(),
            source,
        }
    }
}

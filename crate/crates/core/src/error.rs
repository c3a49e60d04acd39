use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the skinbench library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("training set is empty: {0}")]
    EmptyTrainingSet(String),

    #[error("too few samples: need {needed}, have {available}")]
    TooFewSamples { needed: usize, available: usize },

    #[error("malformed model file: {0}")]
    Format(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error("ensemble has no active member")]
    EmptyEnsemble,

    #[error("invalid ensemble config at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid manifest at line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("entry {0} has no group id")]
    MissingGroup(String),

    #[error("average precision needs at least one positive (face) image")]
    NoPositives,

    #[error("incomplete score matrix: {0}")]
    IncompleteMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("rank {rank} out of range, expected 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("empty interaction matrix")]
    EmptyMatrix,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("refusing to densify {rows}x{cols}: exceeds cap of {cap} entries")]
    TooLarge { rows: usize, cols: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no common users between steps")]
    NoCommonUsers,

    #[error("empty holdout")]
    EmptyHoldout,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output already present in {0}; refusing to overwrite")]
    OutputExists(PathBuf),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn mismatch(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::OutputExists(_) | Error::RankOutOfRange { .. } => ErrorKind::Usage,
            Error::Numerical(_) | Error::DimensionMismatch { .. } | Error::TooLarge { .. } => ErrorKind::Numerical,
            Error::Step { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}

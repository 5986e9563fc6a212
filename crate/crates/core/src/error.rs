use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DriftError>;

/// Errors raised by the index, the query engine and the harness.
#[derive(Debug, Error)]
pub enum DriftError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("out-of-order point: expected ordinal {expected}, got {actual}")]
    OrdinalGap { expected: u64, actual: u64 },

    #[error("invalid granularity chain: {0}")]
    InvalidChain(String),

    #[error("unknown granularity {0}")]
    UnknownGranularity(u64),

    #[error("invalid refinement direction: target {g_t} must be finer than source {g_s}")]
    InvalidRefinement { g_s: u64, g_t: u64 },

    #[error("invalid synthesis direction: target {g_t} must be coarser than source {g_s}")]
    InvalidSynthesis { g_s: u64, g_t: u64 },

    #[error("empty summary")]
    EmptySummary,

    #[error("insufficient calibration data: need at least 2 points, got {0}")]
    InsufficientCalibration(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: line {line}, column {column}: non-numeric value {value:?}")]
    NonNumeric {
        path: PathBuf,
        line: u64,
        column: usize,
        value: String,
    },

    #[error("malformed data: {0}")]
    Data(String),

    #[error("index snapshot: {0}")]
    Snapshot(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("bench cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<DriftError>,
    },
}

impl DriftError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        DriftError::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by the data being processed rather than by the
    /// way the tool was invoked.
    pub fn is_data_error(&self) -> bool {
        match self {
            DriftError::DimensionMismatch { .. }
            | DriftError::OrdinalGap { .. }
            | DriftError::EmptySummary
            | DriftError::InsufficientCalibration(_)
            | DriftError::NonNumeric { .. }
            | DriftError::Data(_)
            | DriftError::Snapshot(_)
            | DriftError::Io { .. } => true,
            DriftError::Cell { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}

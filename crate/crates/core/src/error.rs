//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate bandwidth: median pairwise distance is zero (all points coincide)")]
    DegenerateBandwidth,

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("{context}: expected {expected} columns/entries, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("coordinate index {index} out of range 1..={p}")]
    CoordinateOutOfRange { index: usize, p: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{loss} loss requires labels in {{-1, +1}}; found {value} at row {row}")]
    LabelConvention {
        loss: &'static str,
        value: f64,
        row: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver diverged: objective became non-finite at iteration {0}")]
    SolverDiverged(usize),

    #[error("set member {index} outside 1..={p}")]
    SetMemberOutOfRange { index: usize, p: usize },

    #[error("no stable selection: stability is degenerate over the entire (lambda, v) grid")]
    NoStableSelection,

    #[error("all {0} stability replications failed")]
    AllReplicationsFailed(usize),

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("non-numeric cell at row {row}, column {column}: {cell:?}")]
    NonNumericCell {
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("row {row} has {actual} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("response column {0:?} not found")]
    MissingResponse(String),

    #[error("dataset must contain at least 2 data rows, found {0}")]
    TooFewRows(usize),

    #[error("failed to write report: {0}")]
    ReportWrite(String),
}

impl Error {
    /// CLI exit code: 1 for usage/input errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateBandwidth
            | Error::SolverDiverged(_)
            | Error::NoStableSelection
            | Error::AllReplicationsFailed(_)
            | Error::NonFinite(_) => 2,
            _ => 1,
        }
    }
}

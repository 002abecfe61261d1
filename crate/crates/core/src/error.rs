use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no sessions")]
    EmptyInput,

    #[error("duplicate link {src} -> {dst}")]
    DuplicateLink { src: String, dst: String },

    #[error("page {0:?} is not reachable from the home page")]
    Unreachable(String),

    #[error("home page {0:?} does not occur in the input")]
    UnknownHome(String),

    #[error("page {0:?} is not part of the topology")]
    UnknownPage(String),

    #[error("session {index} does not start and end at the home page")]
    NotAnchored { index: usize },

    #[error("traversed link {src} -> {dst} is absent from the topology")]
    LinkNotInTopology { src: String, dst: String },

    #[error("page {0:?} has no outlinks")]
    DeadEnd(String),

    #[error("row {row} sums to {sum}, expected 1")]
    RowNotStochastic { row: usize, sum: f64 },

    #[error("row {row} has invalid probability {value} for column {col}")]
    InvalidProbability { row: usize, col: usize, value: f64 },

    #[error("support violation at ({row}, {col}): P > 0 where Q = 0")]
    SupportViolation { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("random walk exceeded {cap} steps without returning home")]
    WalkCapExceeded { cap: u64 },

    #[error("walk reached state {0} whose row is empty")]
    EmptyRow(usize),

    #[error("power-law fit needs at least 2 usable points, found {0}")]
    InsufficientPoints(usize),

    #[error("label {0:?} appears twice in one ranking")]
    DuplicateLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::WalkCapExceeded { .. })
    }
}

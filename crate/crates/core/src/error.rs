use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve at point {index}: {reason}")]
    InvalidCurve { index: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("curves do not join: junction gap {gap:e}")]
    JunctionMismatch { gap: f64 },

    #[error("arc-length stations [{s0}, {s1}] outside [0, {length}] or inverted")]
    StationOutOfRange { s0: f64, s1: f64, length: f64 },

    #[error("squared distance {value:e} is negative beyond tolerance (scale {scale:e})")]
    NegativeDistance { value: f64, scale: f64 },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("the root has no path curve")]
    RootHasNoPath,

    #[error("embedding failed after {attempts} attempts: {reason}")]
    EmbeddingFailed { attempts: usize, reason: String },

    #[error("nodes ({0}, {1}, {2}) form neither a chain nor a branching configuration")]
    NotLemmaConfiguration(usize, usize, usize),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("node count mismatch: {0} vs {1}")]
    NodeCountMismatch(usize, usize),

    #[error("integration failed for cell {cell}: {cause}")]
    Integration { cell: usize, cause: String },

    #[error("{failed} of {total} cells failed to integrate (first: cell {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: usize,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

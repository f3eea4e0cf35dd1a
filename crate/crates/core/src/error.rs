use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("matrix is singular to working precision (pivot {pivot:e} at step {step})")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("division by the zero polynomial")]
    ZeroDivisor,

    #[error("invalid sector partition: {0}")]
    InvalidPartition(String),

    #[error("knot sets are not separated (measured ratio {theta})")]
    NotSeparated { theta: f64 },

    #[error("singular Cauchy entry at ({row}, {col}): row knot coincides with column knot")]
    SingularEntry { row: usize, col: usize },

    #[error("no candidate scaling factor avoids the row knots")]
    ChooseFFailed,

    #[error("hierarchical regularity violated: {0}")]
    HierarchicalRegularityViolation(String),

    #[error("duplicate knots at indices {0} and {1}")]
    DuplicateKnots(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

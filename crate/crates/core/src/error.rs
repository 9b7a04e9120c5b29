use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at position {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("not a frame: lower bound {lower:e} does not exceed rank tolerance {tol:e}")]
    NotAFrame { lower: f64, tol: f64 },

    #[error("frame is not Parseval: bounds ({lower}, {upper})")]
    NotParseval { lower: f64, upper: f64 },

    #[error("frame is not tight: bounds ({lower}, {upper})")]
    NotTight { lower: f64, upper: f64 },

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("frame vector {index} is zero")]
    ZeroFrameVector { index: usize },

    #[error("index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("problem size {n} exceeds enumeration limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("vector dimension {dim} exceeds truncation dimension {truncation}")]
    DimensionExceedsTruncation { dim: usize, truncation: usize },

    #[error("moment order k = {k} outside 1..=4")]
    KTooLarge { k: usize },

    #[error("Gramian is singular: smallest eigenvalue {min_eigenvalue:e}")]
    SingularGramian { min_eigenvalue: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("exponent {0} overflows f64")]
    Overflow(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, FrameError>;

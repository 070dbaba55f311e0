//! Crate-wide error type.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A nullspace was requested but the matrix has full column rank.
    EmptyNullspace { rows: usize, cols: usize },
    /// Input is numerically rank deficient where full rank is required.
    RankDeficient { context: &'static str, cond: f64 },
    /// Zero (or below-threshold) pivot hit during LU factorization.
    SingularPivot { index: usize },
    /// Not enough sketch columns for the requested operation.
    InsufficientSamples {
        context: String,
        needed: usize,
        available: usize,
    },
    /// The surviving skeleton is too large to extract from `p` samples.
    FinalSkeletonTooLarge { skeleton: usize, p: usize },
    /// Two point coordinates coincide where the kernel is singular.
    DuplicatePoints { i: usize, j: usize },
    /// A point set or tree was built from no points.
    EmptyPointSet,
    /// The oracle lacks a capability (entries, points, kernel evaluation).
    UnsupportedOracle { context: String },
    /// Diagonal pivot block came out numerically singular.
    SingularPivotBlock { box_id: usize },
    /// Operator/factorization/tree dimensions disagree.
    DimensionMismatch { context: String },
    /// Bad experiment configuration.
    Config(String),
    /// Malformed or truncated binary container.
    Format(String),
    /// Underlying I/O failure.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                context,
                expected,
                got,
            } => write!(
                f,
                "shape mismatch in {context}: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::EmptyNullspace { rows, cols } => {
                write!(f, "matrix {rows}x{cols} has full column rank: empty nullspace")
            }
            Error::RankDeficient { context, cond } => {
                write!(f, "{context}: numerically rank deficient (cond estimate {cond:.3e})")
            }
            Error::SingularPivot { index } => write!(f, "singular pivot at index {index}"),
            Error::InsufficientSamples {
                context,
                needed,
                available,
            } => write!(
                f,
                "insufficient samples in {context}: need {needed}, have {available} (deficit {})",
                needed.saturating_sub(*available)
            ),
            Error::FinalSkeletonTooLarge { skeleton, p } => write!(
                f,
                "final skeleton of size {skeleton} exceeds extraction budget of p = {p} samples; \
                 use a deeper tree or more samples"
            ),
            Error::DuplicatePoints { i, j } => {
                write!(f, "points {i} and {j} coincide; kernel is singular there")
            }
            Error::EmptyPointSet => write!(f, "point set is empty"),
            Error::UnsupportedOracle { context } => write!(f, "oracle capability missing: {context}"),
            Error::SingularPivotBlock { box_id } => {
                write!(f, "pivot block for box {box_id} is numerically singular")
            }
            Error::DimensionMismatch { context } => write!(f, "dimension mismatch: {context}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Error {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

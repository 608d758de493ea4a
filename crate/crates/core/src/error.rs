use alloc::string::String;
use core::fmt;

/// Errors shared across the crate.
///
/// Domain violations are hard errors, never silently mapped to infinite
/// values: a log-wrapped predictor evaluated outside its cone is a caller
/// bug, not a large loss.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Inner argument of a log-wrapped predictor was not strictly positive.
    Domain { sample: usize, value: f64 },
    /// Sample index out of range.
    Index { index: usize, len: usize },
    /// Parameter or sample length disagrees with the spec layout.
    DimensionMismatch { expected: usize, got: usize },
    /// Spec construction violated a structural invariant.
    InvalidSpec(String),
    /// An argument was outside its documented range.
    InvalidArgument(String),
    /// Every multistart initializer fell outside the feasible cone.
    AllStartsInfeasible,
    /// Grid oracle requested above its supported dimension.
    DimensionTooLarge { dim: usize, max: usize },
    /// Lexicographic survivor set came out empty at the given level.
    ResolutionTooCoarse { level: usize },
    /// Stationarity checks require a twice-differentiable spec.
    NonSmoothSpec,
    /// No sample margins within tolerance of the reference level.
    EmptySupport,
    /// Rescaling requires a strictly positive margin level.
    NonPositiveGamma { gamma: f64 },
    /// The constraint system admits no solution.
    Infeasible(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { sample, value } => write!(
                f,
                "sample {sample}: log-family inner argument {value:e} is not strictly positive"
            ),
            Error::Index { index, len } => {
                write!(f, "sample index {index} out of range for {len} samples")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid predictor spec: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::AllStartsInfeasible => {
                write!(f, "all multistart initializers were infeasible")
            }
            Error::DimensionTooLarge { dim, max } => {
                write!(f, "grid oracle supports dimension <= {max}, got {dim}")
            }
            Error::ResolutionTooCoarse { level } => {
                write!(f, "empty survivor set at lexicographic level {level}; grid too coarse for the slack")
            }
            Error::NonSmoothSpec => write!(f, "spec is not smooth enough for stationarity checks"),
            Error::EmptySupport => write!(f, "support set is empty at the given margin level"),
            Error::NonPositiveGamma { gamma } => {
                write!(f, "block rescaling needs gamma > 0, got {gamma:e}")
            }
            Error::Infeasible(msg) => write!(f, "infeasible problem: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

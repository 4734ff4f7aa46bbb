use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex index {index} out of range for graph with {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({i}, {j}) has non-positive or non-finite weight")]
    NonpositiveWeight { i: usize, j: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("no connected graph after {0} attempts")]
    ConnectivityTimeout(usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("row {0} has zero variance")]
    ZeroVarianceRow(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("power spectral density has a negative or non-finite entry at ({0}, {1})")]
    NegativePsd(usize, usize),
    #[error("spectral column {0} mixes zero and nonzero total power")]
    PsdStructureViolation(usize),
    #[error("observation Gram matrix is singular for Hilbert index {0}")]
    SingularObservationGram(usize),
    #[error("truncation {m} outside 1..={d}")]
    InvalidTruncation { m: usize, d: usize },
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("sample set contains missing values")]
    MissingValues,
    #[error("sample plan has no points")]
    EmptyPlan,
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

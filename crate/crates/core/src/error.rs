use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range 1..={n}")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("operator needs two distinct qubits, got {0} twice")]
    SameQubit(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("length {0} is not a power of two")]
    NotQubitSpace(usize),

    #[error("non-finite entries")]
    NonFinite,

    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("zero vector cannot be normalized")]
    ZeroNorm,

    #[error("unsupported size: {0}")]
    Unsupported(String),

    #[error("duplicate coupling for qubit pair ({0}, {1})")]
    DuplicateCoupling(usize, usize),

    #[error("invalid parameter loop: {0}")]
    InvalidLoop(String),

    #[error("logical state {index} is not dark at the loop origin (residual {residual:e})")]
    NotDark { index: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

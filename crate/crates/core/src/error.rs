use thiserror::Error;

/// Errors raised by the balancing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BalanceError {
    #[error("matrix dimension must be positive")]
    EmptyDimension,

    #[error("entry ({row}, {col}) is outside a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("diagonal entry ({index}, {index}) is not allowed in a canonical matrix")]
    DiagonalEntry { index: usize },

    #[error("entry ({row}, {col}) = {value} must be finite and positive")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },

    #[error("duplicate entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("raw entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("dense matrix is not square: row {row} has {len} columns, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },

    #[error("scaling vector has length {got}, matrix has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scaled weights overflowed: x is out of representable range")]
    Overflow,

    #[error("index {index} has zero row or column norm; the matrix is not strongly connected")]
    ZeroNorm { index: usize },

    #[error("matrix is not strongly connected ({components} components); decompose it first")]
    NotStronglyConnected { components: usize },

    #[error("epsilon = {0} is outside (0, 1/2]")]
    InvalidEpsilon(f64),

    #[error("norm exponent p = {0} is invalid")]
    InvalidExponent(f64),

    #[error("iteration limit must be positive")]
    InvalidIterationLimit,

    #[error("no active index to select from")]
    EmptyActiveSet,

    #[error("contracted gradient is undefined when every index is frozen")]
    FullContraction,

    #[error("index sequence {0:?} is not a directed cycle of the matrix graph")]
    NotACycle(Vec<usize>),

    #[error("dense path supports n <= {max}, got {n}")]
    TooLargeForDense { n: usize, max: usize },

    #[error("oracle did not converge within {steps} coordinate steps")]
    OracleDiverged { steps: u64 },

    #[error(
        "step budget of {budget} exhausted in phase {phase} (relative contracted gradient {relative_gradient:e}, {frozen} frozen)"
    )]
    StepBudgetExhausted {
        budget: u64,
        phase: u32,
        relative_gradient: f64,
        frozen: usize,
    },
}

pub type Result<T> = std::result::Result<T, BalanceError>;

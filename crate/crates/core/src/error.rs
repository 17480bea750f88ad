use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular triangular system: zero diagonal at index {0}")]
    Singular(usize),

    #[error("invalid parameter: {0}")]
    Param(String),

    /// A compression step found a rank above the block size.
    /// `level` is the SSS step (1-based) or the HSS tree level, `index` the
    /// HSS node (0 for SSS).
    #[error("quasiseparable order exceeds block size {block} at level {level}, index {index} (rank {rank})")]
    OrderExceeded { level: usize, index: usize, rank: usize, block: usize },

    #[error("generators are not defined on the same grid: {0}")]
    Grid(String),

    #[error("sketched rank profile does not match the pivot block")]
    ProfileMismatch,

    #[error("randomized rank profile failed after {0} attempts")]
    MonteCarloFailure(usize),

    #[error("malformed input: {0}")]
    Parse(String),
}

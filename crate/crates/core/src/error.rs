use thiserror::Error;

/// Errors raised by the solvers and identity checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),

    #[error("reference measure has a zero atom at index {index}")]
    ZeroReference { index: usize },

    #[error("support violation at index {index}: {detail}")]
    SupportViolation { index: usize, detail: &'static str },

    #[error("row marginal differs from the given input measure by {distance:e}")]
    MarginalMismatch { distance: f64 },

    #[error("space must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("information budget must be a non-negative finite number, got {0}")]
    InvalidBudget(f64),

    #[error("budget grid must be sorted ascending (index {index})")]
    UnsortedBudgets { index: usize },

    #[error("transport solution is not optimal")]
    NotOptimal,

    #[error("epsilon is infinite; the bound is vacuous")]
    InfiniteEpsilon,

    #[error("inverse temperature is infinite; {0}")]
    InfiniteBeta(&'static str),

    #[error("instance too large for exhaustive oracle: {size} > {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("construction failed after {attempts} attempts")]
    ConstructionFailed { attempts: usize },

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

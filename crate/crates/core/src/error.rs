use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at grid index {index} (x = {x})")]
    NonFinite { index: usize, x: f64 },
    #[error("evaluation failed at grid index {index} (x = {x}): {source}")]
    Sample {
        index: usize,
        x: f64,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("operators live on different grids")]
    GridMismatch,
    #[error("{what} must be positive, found {value} at x = {x}")]
    NonPositive { what: &'static str, value: f64, x: f64 },
    #[error("|log rho| reaches {log_rho:.1} at x = {x}; truncate the domain")]
    WeightOverflow { x: f64, log_rho: f64 },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("requested {k} eigenvalues of a {n}x{n} matrix")]
    TooManyEigenvalues { k: usize, n: usize },
    #[error("banded eigensolve limited to n <= {limit}, got n = {n}; use a coarser grid")]
    TooLarge { n: usize, limit: usize },
    #[error("convergence study: {0}")]
    Convergence(String),
    #[error("x0 = {x0} lies outside [{x_min}, {x_max}]")]
    OutOfRange { x0: f64, x_min: f64, x_max: f64 },
    #[error("level n = {0} is absent from the spectrum (only n = 0 and n >= 3 exist)")]
    MissingLevel(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FcsError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcsError {
    #[error("invalid weight parameters: need gamma > beta > 0, got beta={beta}, gamma={gamma}")]
    InvalidWeights { beta: f64, gamma: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("curve has h(inf) = {h_inf}; the weighted L2 integral diverges")]
    TailNotNegligible { h_inf: f64 },

    #[error("x = {x} lies outside [0, {x_max}]")]
    OutOfRange { x: f64, x_max: f64 },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("gram matrix is not positive definite")]
    SingularGram,

    #[error("eigen decomposition failed: {0}")]
    EigenFailure(String),

    #[error("rank {requested} exceeds the {available} retained singular values")]
    RankTooLarge { requested: usize, available: usize },

    #[error("operator and curve/system use different bases")]
    BasisMismatch,

    #[error("samples have not decayed at the grid edge (edge {edge:e}, peak {peak:e})")]
    NotDecayed { edge: f64, peak: f64 },

    #[error("shift by {shift} exceeds the grid horizon {horizon}")]
    HorizonExceeded { shift: f64, horizon: f64 },

    #[error("threshold K = {k} must exceed the initial norm {initial}")]
    BadThreshold { k: f64, initial: f64 },

    #[error("ensemble carries no recorded Brownian increments")]
    MissingIncrements,

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

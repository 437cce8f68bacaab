use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Error)]
pub enum HtrError {
    #[error("a rank-one term needs at least two vectors, got {0}")]
    TooFewVectors(usize),
    #[error("vector {index} of a rank-one term is zero")]
    ZeroVector { index: usize },
    #[error("expected {expected} scalars, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("order mismatch: expected {expected}, got {got}")]
    OrderMismatch { expected: usize, got: usize },
    #[error("tensor order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("invalid mode permutation {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("matrix for mode {mode} is singular (|det| = {det:e})")]
    SingularAction { mode: usize, det: f64 },
    #[error("expected a {expected} tensor, got a {got} one")]
    FieldMismatch { expected: Field, got: Field },
    #[error("tensor has rank {0}, not 3")]
    NotRank3(u8),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("moment matrix is singular (|det M| = {det:e} <= {tol:e})")]
    SingularMoment { det: f64, tol: f64 },
    #[error("the 4x4 unfolding is singular (|det| = {0:e})")]
    SingularUnfolding(f64),
    #[error("unknown minimization method `{0}`")]
    UnknownMethod(String),
    #[error("unsupported order {0}")]
    UnsupportedOrder(usize),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HtrError> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("factorization breakdown: pivot {index} = {value:e} below tolerance")]
    PivotBreakdown { index: usize, value: f64 },

    #[error("matrix is not symmetric: entry ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("preconditioner is not positive definite (<Pv, v> = {0:e})")]
    IndefinitePreconditioner(f64),

    #[error("dense oracle size cap exceeded: n = {n} > {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("invalid boundary data: {0}")]
    Boundary(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("projection: {0}")]
    Projection(String),

    #[error("singular operator without declared nullspace: {0}")]
    SingularBlock(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid hessian: {0}")]
    InvalidHessian(String),
    #[error("non-positive curvature s'y = {0:e}")]
    Curvature(f64),
    #[error("degenerate step memory: {0}")]
    DegenerateMemory(&'static str),
    #[error("degenerate angle: {0}")]
    DegenerateAngle(&'static str),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("gradient is zero, problem already solved")]
    AlreadyConverged,
    #[error("unsupported policy: {0}")]
    UnsupportedPolicy(String),
    #[error("singular recurrence map at eps = {0:e}")]
    SingularMap(f64),
    #[error("finite-difference oracle failed: {0}")]
    OracleFailure(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

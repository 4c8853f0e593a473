use thiserror::Error;

use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("not interior")]
    NotInterior,
    #[error("order unit is not interior to the cone")]
    UnitNotInterior,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("element is not invertible")]
    NotInvertible,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative assembly failed: D·x + Φ(x) residual {residual:e}")]
    AssemblyFailure { residual: f64 },
    #[error("quadratic representation paths disagree by {deviation:e}")]
    PipelineInconsistency { deviation: f64 },
    #[error("map is not linearizable (residual {residual:e})")]
    NotLinearizable { residual: f64 },
    #[error("product extraction failed: unit law residual {residual:e}")]
    ExtractionFailure { residual: f64 },
    #[error("order interval sampler starved: {0}")]
    Starvation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("density mass {mass} deviates from 1")]
    DensityMass { mass: f64 },

    #[error("complex has max_dim {max_dim}, but beta_{k} needs simplices up to dimension {}", k + 1)]
    InsufficientDimension { max_dim: usize, k: usize },

    #[error("complexes are not nested: {0}")]
    NotNested(String),

    #[error("limit curve covers s in [{lo}, {hi}] but s in [{need_lo}, {need_hi}] is required")]
    CurveCoverage {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("partition infeasible: {0}")]
    Partition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use thiserror::Error;

/// Errors raised by the valuation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance too large for enumeration ({size} points, cap {cap})")]
    TooLarge { size: usize, cap: usize },

    #[error("use fast_d_shapley for non-uniform schedules")]
    NonUniformSchedule,

    #[error("insufficient samples for m' = {0}")]
    InsufficientSamples(usize),

    #[error("missing value for point id {0}")]
    MissingId(u64),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("APE undefined: total listed value {0} is not positive")]
    ApeUndefined(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

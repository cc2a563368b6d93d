use thiserror::Error;

/// Library error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model component `{component}`: {reason}")]
    InvalidModel { component: String, reason: String },

    #[error("unknown builtin model `{name}`; available: {available}")]
    UnknownModel { name: String, available: String },

    #[error("model inconsistency in `{component}`: {reason}")]
    ModelInconsistency { component: String, reason: String },

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("NaN coordinate passed to quantizer")]
    NanCoordinate,

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bin {bin} received no usable sample mass")]
    EmptyBin { bin: usize },

    #[error("state budget exceeded: need {required} states, budget allows {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("invalid cut type: {0}")]
    InvalidCutType(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("duplicate evaluation points")]
    DuplicateEvals,
    #[error("singular matrix")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("field too small: regularity not reached after {retries} attempts")]
    FieldTooSmall { retries: u32 },
    #[error("bad format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

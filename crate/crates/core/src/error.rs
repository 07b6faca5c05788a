use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature `{feature}` value {value} outside range [{min}, {max}]")]
    RangeViolation {
        feature: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("feature vectors belong to different schemas")]
    SchemaMismatch,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid soft label: {0}")]
    InvalidSoftLabel(String),
    #[error("cosine similarity undefined for a zero-norm vector")]
    UndefinedSimilarity,
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),
    #[error("correlation undefined: zero variance")]
    UndefinedCorrelation,
    #[error("R^2 undefined: zero variance in every output column")]
    UndefinedR2,
    #[error("session {0} is complete")]
    SessionComplete(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("out-of-order trial for session {session_id}: expected index {expected}, got {got}")]
    Sequencing {
        session_id: String,
        expected: u32,
        got: u32,
    },
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

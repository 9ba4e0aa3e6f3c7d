use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing or unknown column `{column}`")]
    Schema { column: String },

    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("at least 2 groups are required, found {found}")]
    InsufficientGroups { found: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate contingency table: a group has no samples")]
    DegenerateTable,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("sample size {n} outside supported range [{min}, {max}]")]
    SampleSize { n: usize, min: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("test mode error: {0}")]
    Mode(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("shape mismatch: expected dimension {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("fold error: {0}")]
    Fold(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the filesystem rather than of the inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }
}

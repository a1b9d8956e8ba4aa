use thiserror::Error;

/// Errors produced by dataset construction, estimators, training and IO.
#[derive(Debug, Error)]
pub enum SurvError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset has no uncensored records")]
    NoEvents,
    #[error("record {index}: feature length {got} does not match dataset dimension {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("record {index}: negative time {time}")]
    NegativeTime { index: usize, time: f64 },
    #[error("record {index}: non-finite value")]
    NonFinite { index: usize },
    #[error("weight vector length {got} does not match dataset size {expected}")]
    WeightLengthMismatch { got: usize, expected: usize },
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
    #[error("kernel parameter must be positive, got {0}")]
    NonPositiveKernelParam(f64),
    #[error("input vector length {got} does not match dimension {expected}")]
    InputDimensionMismatch { got: usize, expected: usize },
    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("time grids do not match")]
    GridMismatch,
    #[error("non-finite gradient at coordinate {0}")]
    NonFiniteGradient(usize),
    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("all time intervals excluded by the log-safety threshold")]
    AllIntervalsExcluded,
    #[error("importance vector is all zero")]
    AllZeroImportance,
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("unknown method '{0}' (valid: survbenim-local, survbenim-global, survbex, survlime, survnam)")]
    UnknownMethod(String),
    #[error("row {row}, column {column}: {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for SurvError {
    fn from(e: csv::Error) -> Self {
        SurvError::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SurvError>;

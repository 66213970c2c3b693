use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("shape error: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("training error at epoch {epoch}, batch {batch}: {message}")]
    Training {
        epoch: usize,
        batch: usize,
        message: String,
    },
    #[error("metric error: {0}")]
    Metric(String),
    #[error("graph error: {0}")]
    Graph(String),
    #[error("identification error: {0}")]
    Identification(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("spec error: {0}")]
    Spec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

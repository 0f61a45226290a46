use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] radon_spectral::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    /// A file that parses but violates the schema.
    #[error("format: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
}

pub type SimResult<T> = Result<T, SimError>;

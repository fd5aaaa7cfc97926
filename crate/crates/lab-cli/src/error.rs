use relulab_core::LabError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("property failure: {0}")]
    Property(String),

    #[error(transparent)]
    Core(#[from] LabError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for invalid input or runtime errors, 2 for a failed property.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Property(_) => 2,
            _ => 1,
        }
    }
}

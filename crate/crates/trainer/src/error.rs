use autodiff_tensor::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },

    #[error("invalid training setup: {0}")]
    BadSetup(String),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("checkpoint is missing field {0:?}")]
    MissingField(&'static str),
}

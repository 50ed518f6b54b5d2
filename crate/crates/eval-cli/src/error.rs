//! Error type for evaluation drivers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset error: {0}")]
    Dataset(#[from] dataset_io::DatasetError),
    #[error("registration failed: {0}")]
    Registration(#[from] registration_baselines::RegistrationError),
    #[error("training error: {0}")]
    Train(#[from] trainer::TrainError),
    #[error("generation failed: {0}")]
    Cut(#[from] cut_gen::CutError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("the dataset has no {0} pairs; run the split step first")]
    MissingSplit(&'static str),
    #[error("{0}")]
    BadArgument(String),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("non-finite gradient for parameter {index}; training diverged")]
    NonFiniteGradient { index: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("checkpoint format {found:?}, expected {expected:?}")]
    WrongFormat { found: String, expected: String },

    #[error("checkpoint blob holds {found} values but the index describes {expected}")]
    BlobSizeMismatch { expected: usize, found: usize },

    #[error("checkpoint index entry {name:?} is inconsistent (shape vs length)")]
    BadIndexEntry { name: String },

    #[error("duplicate tensor name {name:?} in checkpoint")]
    DuplicateName { name: String },

    #[error("non-finite value in tensor {name:?}")]
    NonFiniteTensor { name: String },
}

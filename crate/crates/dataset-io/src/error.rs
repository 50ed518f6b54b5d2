use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{what} contains a non-finite value; refusing to serialize")]
    NonFinite { what: String },

    #[error("stored quaternion has norm {norm}, expected 1 within 1e-9")]
    BadQuaternion { norm: f64 },

    #[error("unsupported format tag {found:?} (this reader handles {expected:?})")]
    WrongFormat { found: String, expected: String },

    #[error("duplicate pair id {id:?} in manifest")]
    DuplicateId { id: String },

    #[error("missing dataset file {path}")]
    MissingFile { path: PathBuf },

    #[error("{path}: byte length {found} is not a whole number of {unit}-byte records")]
    MalformedArray { path: PathBuf, found: usize, unit: usize },

    #[error("{path}: {found} records, expected {expected}")]
    CountMismatch { path: PathBuf, expected: usize, found: usize },

    #[error("split fractions sum to {sum}, expected 1")]
    BadFractions { sum: f64 },

    #[error("need at least {minimum} pairs to split, manifest has {n}")]
    TooFewPairs { n: usize, minimum: usize },
}

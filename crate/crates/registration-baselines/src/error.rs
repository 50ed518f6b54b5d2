use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("point sets must be non-empty")]
    EmptyInput,

    #[error("length mismatch: {src} source points vs {dst} destination points")]
    LengthMismatch { src: usize, dst: usize },

    #[error("{expected} weights required for {points} points")]
    WeightMismatch { points: usize, expected: usize },

    #[error("weights must be nonnegative with a positive sum")]
    BadWeights,

    #[error("need at least {minimum} points, got {n}")]
    TooFewPoints { n: usize, minimum: usize },

    #[error("degenerate point configuration: {detail}")]
    Degenerate { detail: String },

    #[error("point-to-plane alignment requires destination normals")]
    MissingNormals,

    #[error("{normals} destination normals provided for {points} destination points")]
    NormalsMismatch { normals: usize, points: usize },

    #[error("sparse ICP exponent must lie in (0, 1] (or be exactly 2 for the plain least-squares case), got {p}")]
    BadExponent { p: f64 },
}

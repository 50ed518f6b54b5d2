use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} references vertex {index} but mesh has {vertex_count} vertices")]
    FaceIndexOutOfBounds {
        face: usize,
        index: u32,
        vertex_count: usize,
    },

    #[error("face {face} repeats a vertex")]
    RepeatedVertexInFace { face: usize },

    #[error("mesh is not a closed oriented manifold: {detail}")]
    NotWatertight { detail: String },

    #[error("face {face} is degenerate (area {area:.3e} below threshold {threshold:.3e})")]
    DegenerateFace { face: usize, area: f64, threshold: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CutError {
    #[error("no cut with volume ratio in [0.25, 0.75] found after {attempts} attempts (last ratio {last_ratio:.3})")]
    NoValidCut { attempts: u32, last_ratio: f64 },

    #[error("mesh must be normalized before cutting (longest extent {extent}, bbox center norm {center_norm})")]
    NotNormalized { extent: f64, center_norm: f64 },

    #[error("no interior hits in {samples} volume samples; mesh encloses no volume")]
    EmptyInterior { samples: usize },

    #[error("interface sampling starved: produced {got} of {wanted} points")]
    InterfaceSampling { wanted: usize, got: usize },

    #[error("side-restricted surface sampling starved: produced {got} of {wanted} points")]
    SurfaceSampling { wanted: usize, got: usize },

    #[error("shell offset tracing failed for {failed} of {attempted} seeds; mesh too thin for shell thickness {thickness}")]
    ShellTooThin {
        failed: usize,
        attempted: usize,
        thickness: f64,
    },
}

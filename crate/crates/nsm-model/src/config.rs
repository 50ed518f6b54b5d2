//! Network hyper-parameter configuration.

use serde::{Deserialize, Serialize};

/// Hyper-parameters of the point-cloud encoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Number of nearest neighbours used to build the edge graph.
    pub k: usize,
    /// Output width of each edge-convolution layer; the last entry is the
    /// per-point feature dimension produced by the encoder.
    pub channels: Vec<usize>,
}

impl EncoderConfig {
    /// Width of the per-point features the encoder emits.
    pub fn feature_dim(&self) -> usize {
        *self
            .channels
            .last()
            .expect("encoder must have at least one layer")
    }
}

/// Hyper-parameters of the complete mating network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Shared encoder used for both parts (and, with its own weights, by the
    /// discriminator).
    pub encoder: EncoderConfig,
    /// Hidden width of the shared fully-connected layer in the pose regressor.
    pub regressor_hidden: usize,
    /// Hidden width of layers 1-7 of the implicit-surface head.
    pub sdf_hidden: usize,
}

impl ModelConfig {
    /// Per-point feature dimension `d` (last encoder channel).
    pub fn feature_dim(&self) -> usize {
        self.encoder.feature_dim()
    }

    /// Panics if the configuration is internally inconsistent.
    pub fn validate(&self) {
        assert!(self.encoder.k >= 1, "k must be at least 1");
        assert!(
            !self.encoder.channels.is_empty(),
            "encoder needs at least one layer"
        );
        assert!(
            self.encoder.channels.iter().all(|&c| c > 0),
            "channel widths must be positive"
        );
        assert!(self.regressor_hidden > 0, "regressor hidden width must be positive");
        assert!(self.sdf_hidden > 0, "sdf hidden width must be positive");
    }
}

/// Full-size configuration used for real training runs.
pub fn full_config() -> ModelConfig {
    ModelConfig {
        encoder: EncoderConfig {
            k: 20,
            channels: vec![64, 64, 128, 256, 1024],
        },
        regressor_hidden: 256,
        sdf_hidden: 256,
    }
}

/// Reduced configuration: same topology, small widths. Used for fast
/// experiments and CPU-scale training.
pub fn reduced_config() -> ModelConfig {
    ModelConfig {
        encoder: EncoderConfig {
            k: 20,
            channels: vec![16, 16, 32, 64, 64],
        },
        regressor_hidden: 64,
        sdf_hidden: 64,
    }
}

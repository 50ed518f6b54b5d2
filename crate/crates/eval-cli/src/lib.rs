//! Evaluation metrics, experiment drivers, and shared configuration for the
//! `gsm` command-line tool.
//!
//! Rotations are scored as intrinsic Z-Y-X Euler angles in degrees with
//! wrapped per-angle differences; translations per component; a geodesic
//! rotation column is always emitted alongside for convention-independent
//! comparison. Single-transform registration baselines are folded into the
//! two-pose convention by splitting their relative transform evenly.

pub mod error;
pub mod experiments;
pub mod metrics;
pub mod samples;

use nsm_model::{reduced_config, ModelConfig};
use serde::{Deserialize, Serialize};
use trainer::TrainConfig;

pub use error::EvalError;
pub use experiments::{
    evaluate_pairs, learned_poses, load_fold, rotation_sqrt, split_relative, EvalOptions,
    ExperimentKind, MethodSpec, NOISY_SIGMA, SPARSE_ICP_P,
};
pub use metrics::{
    compute_metrics, error_stats, euler_zyx_degrees, geodesic_mae_degrees,
    matrix_from_euler_zyx_degrees, render_csv, rotation_metrics, translation_metrics,
    wrap_degrees, ErrorStats, EvalPair, MetricsRecord, PoseEstimate,
};
pub use samples::{evenly_spaced, to_pair_sample};

/// Complete configuration of one training run, loadable from a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Signed-distance rows kept per part when samples are loaded.
    pub sdf_per_part: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { model: reduced_config(), train: TrainConfig::default(), sdf_per_part: 4096 }
    }
}

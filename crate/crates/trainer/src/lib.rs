//! Alternating two-player training for the shape-mating pose network.
//!
//! The loop optimizes the pose-prediction path (encoder, correlation module,
//! regressor, implicit-surface head) against a weighted sum of the supervised
//! pose loss, the adversarial realism term, and the implicit-surface term,
//! while a separate shape classifier learns to tell predicted assemblies from
//! ground-truth ones. The two parameter subsets are strictly disjoint and
//! each phase leaves the other side's parameters and normalization statistics
//! bit-for-bit untouched.
//!
//! Runs are reproducible: all step randomness flows through one counter-based
//! generator whose position is checkpointed, so an interrupted run resumes
//! with exactly the trajectory of an uninterrupted one.

mod config;
mod data;
mod error;
mod fit;
mod state;
mod steps;

pub use config::{PoseMode, TrainConfig};
pub use data::{
    inverse_rotation_tensor, prepare_pair, rotate_rows, sample_indices, sample_uniform_quat,
    PairSample, PreparedPair, TrainData,
};
pub use error::TrainError;
pub use fit::{fit, pose_validation_metric, write_trace_csv, FitReport, TraceRow};
pub use state::{split_subsets, subset_checksum, TrainState};
pub use steps::{
    discriminator_update, draw_batch, train_discriminator_step, train_generator_step,
    DiscStepOutcome, StepLosses,
};

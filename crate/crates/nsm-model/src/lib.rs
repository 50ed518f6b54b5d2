//! Cross-attention pose-prediction network for pairwise shape mating.
//!
//! The network takes two part point clouds, encodes each with a shared
//! dynamic-graph edge-convolution encoder, correlates the two feature sets
//! with self- and cross-attention, and regresses one rigid motion (unit
//! quaternion plus translation) per part. Auxiliary heads provide an
//! adversarial assembly score and a per-part implicit-surface decoder; the
//! training objectives combine a supervised pose term with those two signals.
//!
//! Everything runs on the reverse-mode autodiff tape from the companion
//! tensor crate, in f64 throughout.

pub mod config;
pub mod knn;
pub mod losses;
pub mod model;
pub mod params;
pub mod pose;
pub mod tape_params;

pub use config::{full_config, reduced_config, EncoderConfig, ModelConfig};
pub use knn::knn_graph;
pub use losses::{
    discriminator_loss, generator_loss, pose_loss, pose_loss_single, sdf_loss, sdf_loss_single,
    PairGroundTruth,
};
pub use model::{
    assemble, attention, dgcnn_encode, discriminate, forward_mating, quat_to_rot, regress_poses,
    sdf_head, transformer_correlate, MatingOutputs, Mode, PosePrediction, LEAKY_SLOPE,
};
pub use params::{BnLayer, BnUpdate, ModelParams, BN_MOMENTUM};
pub use pose::{quat_to_matrix_entries, Pose, QUAT_OUTER_TO_ROT};
pub use tape_params::{is_discriminator_param, TapeModel};

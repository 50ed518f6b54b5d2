//! Procedural generation of shape-mating pairs.
//!
//! A normalized watertight mesh is split in two by a random heightfield
//! cut z = f(x, y): everything above the graph is part A, everything below
//! (or on it) is part B. Parts are never meshed explicitly; they exist as
//! implicit membership predicates (mesh interior tests from winding numbers
//! combined with the cut side), and all downstream data is produced by
//! sampling those predicates:
//!
//! * [`generate_solid_pair`] samples each part's boundary (original surface
//!   plus the cut interface) proportionally to area,
//! * [`generate_shell_pair`] does the same for hollowed parts bounded by
//!   the outer surface and an inward offset at depth 0.05,
//! * [`sdf_samples_for_part`] builds signed-distance supervision sets by
//!   perturbing a dense boundary sampling and measuring nearest-neighbor
//!   distances, with the sign taken from the membership predicate.
//!
//! Cuts whose volume split falls outside [0.25, 0.75] are rejected and
//! resampled (up to 64 attempts). Part clouds are zero-centered; the
//! ground-truth pose stored with each part is the transform that moves the
//! centered cloud back into the assembled configuration.

pub mod cut;
pub mod error;
pub mod pair;
pub mod pose;
pub mod volume;

pub use cut::{sample_cut_spec, CutFamily, CutSpec, Side};
pub use error::CutError;
pub use pair::{
    generate_pair_with_params, generate_shell_pair, generate_solid_pair, sdf_samples_for_part,
    GenParams, PartDomain, PartRecord, SdfSample, ShapePairRecord, ShapeType,
};
pub use pose::{random_pose_pair, uniform_rotation};
pub use volume::{shell_volume_ratio, volume_ratio, VolumeEstimate};

/// Shells extend from the surface down to this depth (in units of the
/// normalized mesh's bounding box).
pub const SHELL_THICKNESS: f64 = 0.05;

/// An accepted cut must leave each part within this volume-fraction range.
pub const MIN_VOLUME_RATIO: f64 = 0.25;
pub const MAX_VOLUME_RATIO: f64 = 0.75;

/// Cut rejection budget per generated pair.
pub const MAX_CUT_ATTEMPTS: u32 = 64;

//! On-disk dataset format for shape-mating pairs, split management, and
//! observation-noise augmentation.
//!
//! A dataset is a directory holding `manifest.json` plus one directory per
//! pair under `pairs/<id>/`. Point and SDF arrays are raw little-endian
//! 32-bit floats (row-major), poses and metadata live in a `meta.json` per
//! pair. Everything round-trips bitwise: reading and rewriting a pair
//! reproduces the files byte for byte.

pub mod error;
pub mod format;
pub mod manifest;
pub mod noise;

pub use error::DatasetError;
pub use format::{pair_id, read_pair, write_pair, LoadedPair, LoadedPart, PairMeta, PoseMeta};
pub use manifest::{
    make_splits, DatasetManifest, ManifestEntry, Split, SplitMode, SplitSpec,
};
pub use noise::add_noise;

/// Format version tag written into every manifest and pair.
pub const FORMAT_VERSION: &str = "gsm-v1";

//! Geometry kernel for watertight triangle meshes.
//!
//! Everything downstream of this crate assumes a closed, consistently
//! oriented 2-manifold, so [`TriMesh`] enforces that at construction time:
//! every directed edge must occur exactly once and be paired with its
//! reverse, face indices must be in bounds, and no face may be degenerate.
//! Meshes that fail validation are rejected, never repaired.
//!
//! On top of the mesh type this crate provides:
//!
//! * OFF and binary STL readers ([`io`]), plus a small set of bundled
//!   primitive meshes ([`bundled`]) used throughout the test suites.
//! * Area-proportional surface sampling with barycentric-uniform placement
//!   ([`sample`]).
//! * A bounding-volume hierarchy ([`Bvh`]) answering exact closest-point
//!   queries and hierarchical winding numbers (exact solid angles in the
//!   near field, first-order dipole approximation in the far field).
//! * Signed distances with the sign taken from the winding number,
//!   negative inside. This convention is fixed for the whole workspace.
//! * A k-d tree over bare point sets ([`PointKdTree`]) for nearest-neighbor
//!   queries.
//! * Brute-force reference implementations ([`reference`]) kept deliberately
//!   independent of the accelerated paths so the two can be checked against
//!   each other.

pub mod bundled;
pub mod bvh;
pub mod error;
pub mod io;
pub mod kdtree;
pub mod mesh;
pub mod reference;
pub mod sample;

pub use bvh::Bvh;
pub use error::MeshError;
pub use kdtree::PointKdTree;
pub use mesh::{Normalization, TriMesh};
pub use sample::{sample_surface, SurfaceSample, SurfaceSampler};

/// Points with winding number above this are classified as interior.
///
/// The winding number of a watertight mesh is integer-valued away from the
/// surface (1 inside, 0 outside), so the midpoint is the natural decision
/// boundary and is robust to the small far-field approximation error.
pub const INSIDE_WINDING_THRESHOLD: f64 = 0.5;

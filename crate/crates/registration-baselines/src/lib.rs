//! Classical rigid registration baselines: weighted Kabsch (Procrustes),
//! iterative closest point in point-to-point and point-to-plane variants,
//! and Sparse ICP via iteratively reweighted least squares.
//!
//! All solvers estimate a single [`RigidTransform`] mapping a source cloud
//! onto a fixed destination cloud. ICP correspondences come from a k-d tree
//! over the destination; the point-to-point inner step is the closed-form
//! weighted Kabsch solution, which makes the objective sequence provably
//! non-increasing. Sparse ICP wraps the same loop with residual-driven
//! weights `max(|r|, 1e-6)^(p-2)`, so `p = 2` reduces exactly to plain ICP.

pub mod error;
pub mod icp;
pub mod kabsch;
pub mod transform;

pub use error::RegistrationError;
pub use icp::{icp, sparse_icp, sparse_weight, IcpParams, IcpResult, IcpVariant, SPARSE_EPS};
pub use kabsch::{kabsch, kabsch_unweighted};
pub use transform::RigidTransform;

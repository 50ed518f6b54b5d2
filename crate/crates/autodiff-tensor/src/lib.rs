//! Dense f64 tensors with reverse-mode automatic differentiation, the ADAM
//! optimizer, a bitwise-exact checkpoint format, and finite-difference
//! checking helpers.
//!
//! The differentiation core is a [`Tape`]: operations append nodes, so node
//! order is already topological and one reverse sweep per [`Var::backward`]
//! call propagates exact chain-rule gradients, accumulating across fan-out
//! and across repeated calls. Everything is 64-bit; gradient fidelity is
//! verified against central finite differences in this crate's test suite.

pub mod check;
pub mod checkpoint;
pub mod error;
pub mod gemm;
pub mod optim;
pub mod tape;
pub mod tensor;

pub use check::{central_difference_gradient, max_relative_error};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT};
pub use error::AutodiffError;
pub use optim::{AdamParams, AdamState};
pub use tape::{BatchStats, Tape, Var, NORM_EPS};
pub use tensor::Tensor;

//! Minimal differentiable-computation layer shared by the distance and
//! ordering networks: dense tensors, a reverse-mode tape, a named parameter
//! store with Adam state, and a gated recurrent cell.
//!
//! Everything is `f64` and single-threaded by construction, so a forward
//! pass, its gradients, and an optimizer step are bit-reproducible for a
//! fixed seed.

pub mod gradcheck;
pub mod gru;
pub mod store;
pub mod tape;
pub mod tensor;

pub use gru::{gru_step, GruWeights};
pub use store::{AdamConfig, ParameterStore};
pub use tape::{softmax_masked, Gradients, Tape, ValueId};
pub use tensor::Tensor;

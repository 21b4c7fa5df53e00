//! Dense tensor arithmetic with reverse-mode gradients.
//!
//! Everything is `f64`. The op set is exactly what the model family needs:
//! linear layers, a GRU cell, concatenation, and the two loss reductions.
//! No broadcasting beyond matrix-vector products and bias rows; shape
//! mismatches are programming errors and panic with the primitive name and
//! the offending shapes.

mod adam;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradcheck, EvalOutput, GradcheckReport};
pub use tape::{sigmoid, softplus, Gradients, NodeId, Tape};
pub use tensor::Tensor;

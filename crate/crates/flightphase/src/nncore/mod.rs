//! Numerical substrate: matrices, activations, loss, initialization, Adam,
//! a seeded RNG, and finite-difference gradient checking.
//!
//! Everything here is generic over [`Scalar`] (f32 or f64), pure, and
//! deterministic: fixed accumulation orders, no platform RNG, no threads.

mod adam;
mod fd;
mod matrix;
mod ops;
mod rng;
mod scalar;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use fd::{finite_difference_grad, max_relative_error, DEFAULT_STEP};
pub use matrix::{Matrix, NumericError};
pub use ops::{cross_entropy, glorot_uniform, relu, relu_backward, softmax, softmax_xent_backward};
pub use rng::Rng;
pub use scalar::Scalar;

//! Dense f64 tensors, the pinned PRNG and the finite-difference gradient
//! oracle used to verify every hand-derived backward pass.

mod gradcheck;
mod rng;
mod tensor;

pub use gradcheck::{finite_diff_gradient, max_relative_error};
pub use rng::{derive_seed, sample_permutation, SeededRng};
pub use tensor::{matmul, Tensor};

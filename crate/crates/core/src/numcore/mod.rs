//! Deterministic numeric foundation shared by every other module.

pub mod gradcheck;
pub mod matrix;
pub mod optim;
pub mod orth;
pub mod rng;
pub mod sampling;

pub use gradcheck::{finite_diff_grad, max_relative_error};
pub use matrix::Matrix;
pub use optim::{sgd_step, OptimState};
pub use orth::{orthonormality_defect, semi_orthogonal_step, semi_orthogonal_step_any};
pub use rng::{derive_seed, streams, Rng};
pub use sampling::{argmax, entropy, gumbel, gumbel_softmax_sample, gumbel_softmax_with_noise, softmax, GumbelSample};

//! Differentiable architecture search over weight-sharing supernets of
//! factored time-delay neural networks (TDNN-F).
//!
//! The crate is organized bottom-up:
//!
//! - [`numcore`]: matrices, seeded RNG streams, softmax / Gumbel-Softmax,
//!   SGD, finite differences and the semi-orthogonal projection step.
//! - [`tdnnf`]: temporal splicing, the factored layer and whole candidate
//!   models with hand-derived backward passes.
//! - [`supernet`]: search spaces, architecture weights, the mixture
//!   forward pass and the architecture-weight gradients.
//! - [`search`]: joint and pipelined DARTS (softmax and Gumbel),
//!   derivation, retraining, random search and the exhaustive oracle.
//! - [`tasks`]: synthetic planted-structure datasets and metrics.
//! - [`io`]: configuration, checkpoints, spec files and reports.

pub mod error;
pub mod io;
pub mod numcore;
pub mod search;
pub mod supernet;
pub mod tasks;
pub mod tdnnf;

pub use error::{Error, Result};

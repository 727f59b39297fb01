//! Synthetic planted-structure tasks, held-out splitting and metrics.

pub mod file;
pub mod generate;
pub mod metrics;
pub mod split;

pub use file::{load_dataset, save_dataset, DATASET_MAGIC};
pub use generate::{
    gen_lagged_product, gen_planted_bottleneck, planted_teacher, BottleneckTask, Dataset,
    Generator, Provenance, Teacher,
};
pub use metrics::{evaluate, Metrics};
pub use split::{split_heldout, split_indices};

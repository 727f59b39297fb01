//! Artifact formats: configuration, checkpoints, spec files, run records,
//! trajectories and reports.

pub mod bin;
pub mod checkpoint;
pub mod config;
pub mod notation;
pub mod report;
pub mod specfile;
pub mod trajectory;

pub use checkpoint::{Checkpoint, Dtype, Tensor, CHECKPOINT_MAGIC};
pub use config::{Config, ModelConfig, OutputConfig, SpaceConfig, TaskConfig, TaskKind};
pub use notation::{format_spec, parse_spec};
pub use report::{report_csv, report_markdown, report_rows, ReportRow};
pub use specfile::{SpecFile, SPEC_MAGIC};
pub use trajectory::{load_trajectory, save_trajectory, TRAJECTORY_MAGIC};

//! Search procedures, derivation, retraining and baselines.

pub mod baseline;
pub mod config;
pub mod darts;
pub mod derive;
pub mod record;
pub mod run;
pub mod train;

pub use baseline::{
    candidate_seed, exhaustive_oracle, oracle_order, random_search, worker_threads, RandomSearch,
    Ranked, THREADS_ENV,
};
pub use config::{anneal_temperature, LrSchedule, Method, SearchConfig};
pub use darts::{
    joint_darts_search, pipeline_stage1, pipeline_stage2, pipelined_search, sample_one_hot,
    SearchOutcome, TrajectoryRow,
};
pub use derive::{derive_architecture, select_candidate};
pub use record::{RunRecord, RECORD_MAGIC, RECORD_VERSION};
pub use run::{default_system_id, retrain_seed, run_search, RunOutput};
pub use train::{prepare_split, retrain, train_candidate, EpochLog, Retrained, SplitData};

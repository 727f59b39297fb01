//! Random search and the exhaustive oracle. Both retrain candidates from
//! scratch, one init seed per candidate index, and may run candidates on
//! parallel workers.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SearchConfig;
use super::train::{retrain, SplitData};
use crate::error::{Error, Result};
use crate::numcore::{derive_seed, streams, Rng};
use crate::supernet::SearchSpace;
use crate::tasks::Metrics;
use crate::tdnnf::{CandidateSpec, Sequence};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "TDNNAS_THREADS";

/// One retrained candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    /// Mixed-radix index of the candidate in its space, when it fits in a
    /// `u64`.
    pub index: Option<u64>,
    pub spec: CandidateSpec,
    pub heldout: Metrics,
    pub test: Option<Metrics>,
    pub param_count: usize,
}

/// Worker count from `TDNNAS_THREADS`, else the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Init seed of the candidate at `index`.
pub fn candidate_seed(root: u64, index: u64) -> u64 {
    derive_seed(root, index)
}

/// Init seed of the `draw`-th random sample of a space too large to index.
fn draw_seed(root: u64, draw: usize) -> u64 {
    derive_seed(derive_seed(root, u64::MAX), draw as u64)
}

fn train_all(
    jobs: Vec<(Option<u64>, CandidateSpec, u64)>,
    split: &SplitData,
    test: Option<&[Sequence]>,
    cfg: &SearchConfig,
) -> Result<Vec<Ranked>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        jobs.into_par_iter()
            .map(|(index, spec, seed)| {
                let r = retrain(&spec, split, test, cfg, seed)?;
                Ok(Ranked {
                    index,
                    spec,
                    heldout: r.heldout,
                    test: r.test,
                    param_count: r.param_count,
                })
            })
            .collect()
    })
}

/// Held-out accuracy descending, then held-out loss ascending, then fewer
/// parameters, then lower index.
pub fn oracle_order(a: &Ranked, b: &Ranked) -> Ordering {
    b.heldout
        .accuracy
        .total_cmp(&a.heldout.accuracy)
        .then(a.heldout.mean_loss.total_cmp(&b.heldout.mean_loss))
        .then(a.param_count.cmp(&b.param_count))
        .then(a.index.cmp(&b.index))
}

/// Held-out accuracy descending, then fewer parameters, then held-out loss
/// ascending.
fn random_order(a: &Ranked, b: &Ranked) -> Ordering {
    b.heldout
        .accuracy
        .total_cmp(&a.heldout.accuracy)
        .then(a.param_count.cmp(&b.param_count))
        .then(a.heldout.mean_loss.total_cmp(&b.heldout.mean_loss))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSearch {
    /// Every sampled candidate in draw order.
    pub samples: Vec<Ranked>,
    /// Position of the winner in `samples`.
    pub best: usize,
}

impl RandomSearch {
    pub fn winner(&self) -> &Ranked {
        &self.samples[self.best]
    }
}

/// Draws `cfg.random_samples` candidates uniformly (with replacement),
/// retrains each and keeps the best by held-out accuracy.
pub fn random_search(
    space: &SearchSpace,
    split: &SplitData,
    test: Option<&[Sequence]>,
    cfg: &SearchConfig,
) -> Result<RandomSearch> {
    cfg.validate()?;
    space.validate()?;
    let mut rng = Rng::new(cfg.seed, streams::RANDOM_SEARCH);
    let jobs = (0..cfg.random_samples)
        .map(|draw| {
            let spec = space.sample_uniform(&mut rng);
            let index = space.index_of(&spec);
            let seed = match index {
                Some(i) => candidate_seed(cfg.seed, i),
                None => draw_seed(cfg.seed, draw),
            };
            (index, spec, seed)
        })
        .collect();
    let samples = train_all(jobs, split, test, cfg)?;
    let best = (0..samples.len())
        .min_by(|&i, &j| random_order(&samples[i], &samples[j]).then(i.cmp(&j)))
        .expect("at least one sample");
    Ok(RandomSearch { samples, best })
}

/// Retrains every candidate of `space` and ranks them, best first.
pub fn exhaustive_oracle(
    space: &SearchSpace,
    split: &SplitData,
    test: Option<&[Sequence]>,
    cfg: &SearchConfig,
) -> Result<Vec<Ranked>> {
    cfg.validate()?;
    space.validate()?;
    let size = match space.size_u64() {
        Some(s) if s <= cfg.oracle_cap => s,
        _ => {
            return Err(Error::SpaceTooLarge {
                size: space.size().to_string(),
                cap: cfg.oracle_cap,
            })
        }
    };
    let jobs = (0..size)
        .map(|i| Ok((Some(i), space.candidate(i)?, candidate_seed(cfg.seed, i))))
        .collect::<Result<_>>()?;
    let mut ranked = train_all(jobs, split, test, cfg)?;
    ranked.sort_by(oracle_order);
    Ok(ranked)
}

//! One complete run: search (or baseline), derivation and retraining.

use std::time::Instant;

use super::baseline::{candidate_seed, exhaustive_oracle, random_search, Ranked};
use super::config::{Method, SearchConfig};
use super::darts::{joint_darts_search, pipelined_search, SearchOutcome};
use super::derive::derive_architecture;
use super::record::{RunRecord, RECORD_MAGIC, RECORD_VERSION};
use super::train::{retrain, Retrained, SplitData};
use crate::error::Result;
use crate::io::notation::format_spec;
use crate::numcore::derive_seed;
use crate::supernet::SearchSpace;
use crate::tdnnf::{CandidateSpec, Sequence};

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: RunRecord,
    /// Supernet state of differentiable methods.
    pub search: Option<SearchOutcome>,
    /// Every candidate trained by random search or the oracle, best first
    /// for the oracle and in draw order for random search.
    pub candidates: Vec<Ranked>,
    pub retrained: Retrained,
}

/// Init seed used to retrain a selected candidate.
pub fn retrain_seed(space: &SearchSpace, spec: &CandidateSpec, root: u64) -> u64 {
    match space.index_of(spec) {
        Some(i) => candidate_seed(root, i),
        None => derive_seed(root, u64::MAX - 1),
    }
}

pub fn default_system_id(cfg: &SearchConfig) -> String {
    format!("{}-eta{}-seed{}", cfg.method, cfg.eta, cfg.seed)
}

/// Runs `cfg.method` on `space`, retrains the selected candidate from
/// scratch and summarizes everything in a [`RunRecord`].
pub fn run_search(
    space: &SearchSpace,
    split: &SplitData,
    test: Option<&[Sequence]>,
    cfg: &SearchConfig,
    system: &str,
    config_hash: &str,
) -> Result<RunOutput> {
    cfg.validate()?;
    space.validate()?;
    let start = Instant::now();
    let mut search = None;
    let mut candidates = Vec::new();
    let spec = match cfg.method {
        Method::SoftmaxDarts | Method::GumbelDarts => {
            let out = joint_darts_search(space, split, cfg)?;
            let spec = derive_architecture(&out.arch, space)?;
            search = Some(out);
            spec
        }
        Method::PipeSoftmax | Method::PipeGumbel => {
            let out = pipelined_search(space, split, cfg)?;
            let spec = derive_architecture(&out.arch, space)?;
            search = Some(out);
            spec
        }
        Method::Random => {
            let r = random_search(space, split, test, cfg)?;
            let spec = r.winner().spec.clone();
            candidates = r.samples;
            spec
        }
        Method::Exhaustive => {
            candidates = exhaustive_oracle(space, split, test, cfg)?;
            candidates[0].spec.clone()
        }
    };
    let retrained = retrain(&spec, split, test, cfg, retrain_seed(space, &spec, cfg.seed))?;
    let mut epochs = search.as_ref().map(|s| s.epochs.clone()).unwrap_or_default();
    epochs.extend(retrained.epochs.iter().cloned());
    let trajectory_rows = search.as_ref().map_or(0, |s| s.trajectory.len());
    let record = RunRecord {
        format: RECORD_MAGIC.into(),
        version: RECORD_VERSION,
        system: system.into(),
        method: cfg.method,
        eta: cfg.eta,
        seed: cfg.seed,
        config_hash: config_hash.into(),
        config: cfg.clone(),
        space: space.clone(),
        architecture: format_spec(&spec),
        param_count: retrained.param_count,
        spec,
        epochs,
        heldout: retrained.heldout.clone(),
        test: retrained.test.clone(),
        trajectory: None,
        trajectory_rows,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        record,
        search,
        candidates,
        retrained,
    })
}

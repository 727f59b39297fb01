//! Minibatch SGD for standalone candidates, and retraining from scratch.

use serde::{Deserialize, Serialize};

use super::config::{LrSchedule, SearchConfig};
use crate::error::{Error, Result};
use crate::numcore::{sgd_step, streams, OptimState, Rng};
use crate::tasks::{evaluate, split_heldout, Dataset, Metrics};
use crate::tdnnf::{model_backward, model_forward_loss, CandidateSpec, ModelParams, Sequence};

/// Train and held-out parts of the search data.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitData {
    pub train: Vec<Sequence>,
    pub heldout: Vec<Sequence>,
}

/// Splits `data` with the run's seed: every method and the oracle see the
/// same partition.
pub fn prepare_split(data: &Dataset, cfg: &SearchConfig) -> Result<SplitData> {
    let mut rng = Rng::new(cfg.seed, streams::SPLIT);
    let (train, heldout) = split_heldout(data, cfg.heldout_frac, &mut rng)?;
    Ok(SplitData {
        train: train.sequences,
        heldout: heldout.sequences,
    })
}

/// One shuffled pass over `n` items in chunks of `batch`.
pub(crate) fn epoch_batches(n: usize, batch: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect()
}

pub(crate) fn apply_sgd(params: &mut ModelParams, grads: &ModelParams, state: &mut OptimState) -> Result<()> {
    let g = grads.tensors();
    sgd_step(&mut params.tensors_mut(), &g, state)
}

pub(crate) fn check_loss(step: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged { step, loss })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub stage: String,
    pub epoch: usize,
    /// Mean minibatch loss over the epoch.
    pub train_loss: f64,
    pub heldout_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

/// Trains `params` in place and returns the mean loss of every epoch.
pub fn train_candidate(
    spec: &CandidateSpec,
    params: &mut ModelParams,
    train: &[Sequence],
    cfg: &SearchConfig,
    lr: f64,
    schedule: LrSchedule,
    epochs: usize,
    shuffle: &mut Rng,
    mut on_epoch: impl FnMut(usize, f64, &ModelParams) -> Result<()>,
) -> Result<()> {
    if train.is_empty() {
        return Err(Error::InvalidDataset("no training sequences".into()));
    }
    let mut opt = OptimState::new(lr, cfg.momentum);
    let mut step = 0;
    for epoch in 0..epochs {
        let mut total = 0.0;
        let batches = epoch_batches(train.len(), cfg.batch_size, shuffle);
        for batch in &batches {
            let scale = 1.0 / batch.len() as f64;
            let mut grads = params.zeros_like();
            let mut loss = 0.0;
            for &i in batch {
                let pass = model_forward_loss(spec, params, &train[i], cfg.loss)?;
                loss += scale * pass.loss;
                model_backward(&pass, params, scale, &mut grads)?;
            }
            check_loss(step, loss)?;
            opt.lr = schedule.rate(lr, step, epochs * batches.len());
            apply_sgd(params, &grads, &mut opt)?;
            step += 1;
            if step % cfg.orth_period == 0 {
                params.constrain(cfg.orth_nu)?;
            }
            total += loss;
        }
        on_epoch(epoch, total / batches.len() as f64, params)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Retrained {
    pub params: ModelParams,
    pub param_count: usize,
    pub heldout: Metrics,
    pub test: Option<Metrics>,
    pub epochs: Vec<EpochLog>,
}

/// Fresh initialization from `init_seed`, `epochs_retrain` epochs on the
/// training split, then held-out (and test) metrics.
pub fn retrain(
    spec: &CandidateSpec,
    split: &SplitData,
    test: Option<&[Sequence]>,
    cfg: &SearchConfig,
    init_seed: u64,
) -> Result<Retrained> {
    spec.validate()?;
    let mut params = ModelParams::init(spec, &mut Rng::new(init_seed, streams::INIT))?;
    let mut shuffle = Rng::new(init_seed, streams::SHUFFLE);
    let mut epochs = Vec::with_capacity(cfg.epochs_retrain);
    let mut last = None;
    train_candidate(
        spec,
        &mut params,
        &split.train,
        cfg,
        cfg.retrain_lr(),
        cfg.retrain_lr_schedule,
        cfg.epochs_retrain,
        &mut shuffle,
        |epoch, loss, p| {
            let heldout = evaluate(spec, p, &split.heldout, cfg.loss)?;
            let test = test.map(|t| evaluate(spec, p, t, cfg.loss)).transpose()?;
            epochs.push(EpochLog {
                stage: "retrain".into(),
                epoch,
                train_loss: loss,
                heldout_accuracy: Some(heldout.accuracy),
                test_accuracy: test.as_ref().map(|m| m.accuracy),
            });
            last = Some((heldout, test));
            Ok(())
        },
    )?;
    let (heldout, test) = last.expect("at least one retraining epoch");
    Ok(Retrained {
        param_count: params.param_count(),
        params,
        heldout,
        test,
        epochs,
    })
}

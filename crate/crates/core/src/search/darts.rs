//! Joint and pipelined differentiable search.
//!
//! Joint search updates model parameters and architecture weights from the
//! same minibatch loss. Pipelined search first trains the shared
//! parameters under uniformly sampled one-hot architectures, then freezes
//! them and fits only the architecture weights on the held-out split.

use serde::{Deserialize, Serialize};

use super::config::{anneal_temperature, SearchConfig};
use super::train::{apply_sgd, check_loss, epoch_batches, EpochLog, SplitData};
use crate::error::{Error, Result};
use crate::numcore::{sgd_step, streams, OptimState, Rng};
use crate::supernet::{
    accumulate_logit_grads, penalty, supernet_backward, supernet_forward_loss, ArchWeights,
    AxisKind, AxisSet, LayerMix, SearchSpace, Supernet,
};
use crate::tdnnf::{ModelParams, Sequence};

/// Softmax weights of every searched axis of one layer after an
/// architecture step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub layer: usize,
    pub temperature: f64,
    pub lambda: Vec<(AxisKind, Vec<f64>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub net: Supernet,
    pub arch: ArchWeights,
    /// Shared parameters at the end of stage 1 (pipelined search only).
    pub stage1_params: Option<ModelParams>,
    /// How often each candidate of each searched axis was drawn in stage 1.
    pub selection_counts: Vec<AxisSet<Vec<u64>>>,
    pub trajectory: Vec<TrajectoryRow>,
    pub epochs: Vec<EpochLog>,
}

fn record_trajectory(
    arch: &ArchWeights,
    space: &SearchSpace,
    step: usize,
    temperature: f64,
    out: &mut Vec<TrajectoryRow>,
) -> Result<()> {
    let mixes = arch.softmax_mix()?;
    for (l, (m, ls)) in mixes.iter().zip(&space.layers).enumerate() {
        let lambda: Vec<(AxisKind, Vec<f64>)> = ls
            .searched_axes()
            .into_iter()
            .map(|k| (k, m.get(k).clone()))
            .collect();
        if !lambda.is_empty() {
            out.push(TrajectoryRow {
                step,
                layer: l,
                temperature,
                lambda,
            });
        }
    }
    Ok(())
}

/// Architecture weights for one step: one softmax mixture, or `samples`
/// Gumbel-Softmax mixtures at temperature `t`.
fn step_mixtures(
    arch: &ArchWeights,
    gumbel: bool,
    samples: usize,
    t: f64,
    rng: &mut Rng,
) -> Result<Vec<Vec<LayerMix>>> {
    if gumbel {
        (0..samples)
            .map(|_| {
                let noise = arch.sample_noise(rng);
                arch.gumbel_mix(&noise, t)
            })
            .collect()
    } else {
        Ok(vec![arch.softmax_mix()?])
    }
}

/// Loss, parameter gradients (when requested) and architecture gradients
/// of one minibatch, averaged over sequences and mixture samples. The
/// penalty is included in both the loss and the architecture gradient.
#[allow(clippy::too_many_arguments)]
fn batch_step(
    net: &Supernet,
    arch: &ArchWeights,
    mixes: &[Vec<LayerMix>],
    batch: &[&Sequence],
    cfg: &SearchConfig,
    temperature: f64,
    mut param_grads: Option<&mut ModelParams>,
) -> Result<(f64, ArchWeights)> {
    let mut arch_grads = arch.zeros_like();
    let mut loss = 0.0;
    let per_sample = 1.0 / mixes.len() as f64;
    let scale = per_sample / batch.len() as f64;
    for mix in mixes {
        let (pen, pen_grads) = penalty(&net.space, mix, cfg.eta)?;
        loss += per_sample * pen;
        let mut scores: Vec<AxisSet<Vec<f64>>> = pen_grads
            .into_iter()
            .map(|g| g.map(|_, v| v.iter().map(|x| x * per_sample).collect()))
            .collect();
        for seq in batch {
            let pass = supernet_forward_loss(net, mix, seq, cfg.loss, true)?;
            loss += scale * pass.loss;
            let s = supernet_backward(net, &pass, scale, param_grads.as_deref_mut())?;
            for (acc, layer) in scores.iter_mut().zip(s) {
                for k in AxisKind::ALL {
                    for (a, b) in acc.get_mut(k).iter_mut().zip(layer.get(k)) {
                        *a += b;
                    }
                }
            }
        }
        accumulate_logit_grads(mix, &scores, temperature, 1.0, &mut arch_grads);
    }
    Ok((loss, arch_grads))
}

fn arch_step(arch: &mut ArchWeights, grads: &ArchWeights, opt: &mut OptimState) -> Result<()> {
    let g = grads.tensors();
    sgd_step(&mut arch.tensors_mut(), &g, opt)
}

fn seqs<'a>(pool: &'a [Sequence], idx: &[usize]) -> Vec<&'a Sequence> {
    idx.iter().map(|&i| &pool[i]).collect()
}

/// Joint search: every minibatch of the training split updates both the
/// shared parameters and the architecture weights.
pub fn joint_darts_search(space: &SearchSpace, split: &SplitData, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::InvalidDataset("no training sequences".into()));
    }
    let gumbel = cfg.method.is_gumbel();
    let mut net = Supernet::init(space.clone(), &mut Rng::new(cfg.seed, streams::INIT))?;
    let mut arch = ArchWeights::uniform(space);
    let mut shuffle = Rng::new(cfg.seed, streams::SHUFFLE);
    let mut noise = Rng::new(cfg.seed, streams::GUMBEL);
    let mut model_opt = OptimState::new(cfg.model_lr, cfg.momentum);
    let mut arch_opt = OptimState::new(cfg.arch_lr, cfg.momentum);

    let per_epoch = split.train.len().div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.epochs_search;
    let mut trajectory = Vec::new();
    let mut epochs = Vec::new();
    let mut step = 0;
    for epoch in 0..cfg.epochs_search {
        let mut epoch_loss = 0.0;
        for batch in epoch_batches(split.train.len(), cfg.batch_size, &mut shuffle) {
            let t = if gumbel {
                anneal_temperature(step, total, cfg.t_start, cfg.t_end)
            } else {
                1.0
            };
            let mixes = step_mixtures(&arch, gumbel, cfg.samples, t, &mut noise)?;
            let mut grads = net.params.zeros_like();
            let (loss, arch_grads) = batch_step(
                &net,
                &arch,
                &mixes,
                &seqs(&split.train, &batch),
                cfg,
                t,
                Some(&mut grads),
            )?;
            check_loss(step, loss)?;
            apply_sgd(&mut net.params, &grads, &mut model_opt)?;
            arch_step(&mut arch, &arch_grads, &mut arch_opt)?;
            step += 1;
            if step % cfg.orth_period == 0 {
                net.params.constrain(cfg.orth_nu)?;
            }
            record_trajectory(&arch, space, step, t, &mut trajectory)?;
            epoch_loss += loss;
        }
        epochs.push(EpochLog {
            stage: "joint".into(),
            epoch,
            train_loss: epoch_loss / per_epoch as f64,
            heldout_accuracy: None,
            test_accuracy: None,
        });
    }
    Ok(SearchOutcome {
        net,
        arch,
        stage1_params: None,
        selection_counts: Vec::new(),
        trajectory,
        epochs,
    })
}

/// One uniformly drawn one-hot mixture per layer; also returns the drawn
/// index of every axis.
pub fn sample_one_hot(space: &SearchSpace, rng: &mut Rng) -> (Vec<LayerMix>, Vec<AxisSet<usize>>) {
    let mut mixes = Vec::with_capacity(space.layers.len());
    let mut picks = Vec::with_capacity(space.layers.len());
    for ls in &space.layers {
        let idx = AxisSet::from_fn(|k| {
            let n = ls.axis_len(k);
            if n >= 2 {
                rng.below(n)
            } else {
                0
            }
        });
        mixes.push(AxisSet::from_fn(|k| {
            let mut v = vec![0.0; ls.axis_len(k)];
            v[*idx.get(k)] = 1.0;
            v
        }));
        picks.push(idx);
    }
    (mixes, picks)
}

/// Stage 1: trains only the shared parameters, one uniformly sampled
/// one-hot architecture per minibatch.
pub fn pipeline_stage1(
    net: &mut Supernet,
    train: &[Sequence],
    cfg: &SearchConfig,
    epochs: &mut Vec<EpochLog>,
) -> Result<Vec<AxisSet<Vec<u64>>>> {
    let space = net.space.clone();
    let mut shuffle = Rng::new(cfg.seed, streams::SHUFFLE);
    let mut pick_rng = Rng::new(cfg.seed, streams::ONE_HOT);
    let mut opt = OptimState::new(cfg.model_lr, cfg.momentum);
    let mut counts: Vec<AxisSet<Vec<u64>>> = space
        .layers
        .iter()
        .map(|ls| AxisSet::from_fn(|k| vec![0; ls.axis_len(k)]))
        .collect();
    let per_epoch = train.len().div_ceil(cfg.batch_size);
    let mut step = 0;
    for epoch in 0..cfg.epochs_search {
        let mut epoch_loss = 0.0;
        for batch in epoch_batches(train.len(), cfg.batch_size, &mut shuffle) {
            let (mix, picks) = sample_one_hot(&space, &mut pick_rng);
            for (c, p) in counts.iter_mut().zip(&picks) {
                for k in AxisKind::ALL {
                    c.get_mut(k)[*p.get(k)] += 1;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let mut grads = net.params.zeros_like();
            let mut loss = 0.0;
            for &i in &batch {
                let pass = supernet_forward_loss(net, &mix, &train[i], cfg.loss, false)?;
                loss += scale * pass.loss;
                supernet_backward(net, &pass, scale, Some(&mut grads))?;
            }
            check_loss(step, loss)?;
            apply_sgd(&mut net.params, &grads, &mut opt)?;
            step += 1;
            if step % cfg.orth_period == 0 {
                net.params.constrain(cfg.orth_nu)?;
            }
            epoch_loss += loss;
        }
        epochs.push(EpochLog {
            stage: "stage1".into(),
            epoch,
            train_loss: epoch_loss / per_epoch as f64,
            heldout_accuracy: None,
            test_accuracy: None,
        });
    }
    Ok(counts)
}

/// Stage 2: shared parameters frozen, architecture weights fitted on
/// `data` (the held-out split unless configured otherwise).
pub fn pipeline_stage2(
    net: &Supernet,
    data: &[Sequence],
    cfg: &SearchConfig,
    epochs: &mut Vec<EpochLog>,
) -> Result<(ArchWeights, Vec<TrajectoryRow>)> {
    if data.is_empty() {
        return Err(Error::EmptyHeldout);
    }
    let gumbel = cfg.method.is_gumbel();
    let mut arch = ArchWeights::uniform(&net.space);
    let mut shuffle = Rng::new(cfg.seed, streams::ARCH_SHUFFLE);
    let mut noise = Rng::new(cfg.seed, streams::GUMBEL);
    let mut opt = OptimState::new(cfg.arch_lr, cfg.momentum);
    let per_epoch = data.len().div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.epochs_arch;
    let mut trajectory = Vec::new();
    let mut step = 0;
    for epoch in 0..cfg.epochs_arch {
        let mut epoch_loss = 0.0;
        for batch in epoch_batches(data.len(), cfg.batch_size, &mut shuffle) {
            let t = if gumbel {
                anneal_temperature(step, total, cfg.t_start, cfg.t_end)
            } else {
                1.0
            };
            let mixes = step_mixtures(&arch, gumbel, cfg.samples, t, &mut noise)?;
            let (loss, grads) = batch_step(net, &arch, &mixes, &seqs(data, &batch), cfg, t, None)?;
            check_loss(step, loss)?;
            arch_step(&mut arch, &grads, &mut opt)?;
            step += 1;
            record_trajectory(&arch, &net.space, step, t, &mut trajectory)?;
            epoch_loss += loss;
        }
        epochs.push(EpochLog {
            stage: "stage2".into(),
            epoch,
            train_loss: epoch_loss / per_epoch as f64,
            heldout_accuracy: None,
            test_accuracy: None,
        });
    }
    Ok((arch, trajectory))
}

pub fn pipelined_search(space: &SearchSpace, split: &SplitData, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::InvalidDataset("no training sequences".into()));
    }
    let arch_data = if cfg.arch_on_train {
        &split.train
    } else {
        &split.heldout
    };
    if arch_data.is_empty() {
        return Err(Error::EmptyHeldout);
    }
    let mut net = Supernet::init(space.clone(), &mut Rng::new(cfg.seed, streams::INIT))?;
    let mut epochs = Vec::new();
    let selection_counts = pipeline_stage1(&mut net, &split.train, cfg, &mut epochs)?;
    let stage1_params = net.params.clone();
    let (arch, trajectory) = pipeline_stage2(&net, arch_data, cfg, &mut epochs)?;
    Ok(SearchOutcome {
        net,
        arch,
        stage1_params: Some(stage1_params),
        selection_counts,
        trajectory,
        epochs,
    })
}

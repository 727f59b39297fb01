//! Search hyper-parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::orth::{DEFAULT_NU, DEFAULT_PERIOD};
use crate::tdnnf::LossKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SoftmaxDarts,
    GumbelDarts,
    PipeSoftmax,
    PipeGumbel,
    Random,
    Exhaustive,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SoftmaxDarts,
        Method::GumbelDarts,
        Method::PipeSoftmax,
        Method::PipeGumbel,
        Method::Random,
        Method::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SoftmaxDarts => "softmax-darts",
            Method::GumbelDarts => "gumbel-darts",
            Method::PipeSoftmax => "pipe-softmax",
            Method::PipeGumbel => "pipe-gumbel",
            Method::Random => "random",
            Method::Exhaustive => "exhaustive",
        }
    }

    pub fn is_gumbel(self) -> bool {
        matches!(self, Method::GumbelDarts | Method::PipeGumbel)
    }

    pub fn is_pipelined(self) -> bool {
        matches!(self, Method::PipeSoftmax | Method::PipeGumbel)
    }

    pub fn is_differentiable(self) -> bool {
        !matches!(self, Method::Random | Method::Exhaustive)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method {s:?}; expected one of {}",
                    Method::ALL.map(Method::name).join(", ")
                ))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Learning-rate schedule of from-scratch retraining.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Decays linearly from the initial rate towards zero over all steps.
    Linear,
}

impl LrSchedule {
    /// Rate for `step` of `total` optimizer steps.
    pub fn rate(self, lr: f64, step: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Constant => lr,
            LrSchedule::Linear => lr * (1.0 - step as f64 / total.max(1) as f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub method: Method,
    /// Weight of the expected-size penalty.
    pub eta: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Gumbel samples per architecture step.
    pub samples: usize,
    /// Joint search, or stage 1 of the pipelined search.
    pub epochs_search: usize,
    /// Stage 2 of the pipelined search.
    pub epochs_arch: usize,
    pub epochs_retrain: usize,
    pub heldout_frac: f64,
    /// Sequences per minibatch.
    pub batch_size: usize,
    pub model_lr: f64,
    /// Learning rate of from-scratch retraining; `model_lr` when unset.
    pub retrain_lr: Option<f64>,
    pub retrain_lr_schedule: LrSchedule,
    pub arch_lr: f64,
    pub momentum: f64,
    /// Optimizer steps between semi-orthogonal projection steps.
    pub orth_period: usize,
    pub orth_nu: f64,
    /// Fit architecture weights on the training split instead of the
    /// held-out split in stage 2.
    pub arch_on_train: bool,
    /// Largest space the exhaustive oracle will enumerate.
    pub oracle_cap: u64,
    /// Candidates drawn by random search.
    pub random_samples: usize,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            method: Method::PipeGumbel,
            eta: 0.0,
            t_start: 1.0,
            t_end: 0.03,
            samples: 4,
            epochs_search: 3,
            epochs_arch: 3,
            epochs_retrain: 3,
            heldout_frac: 0.05,
            batch_size: 8,
            model_lr: 0.01,
            retrain_lr: None,
            retrain_lr_schedule: LrSchedule::Constant,
            arch_lr: 0.003,
            momentum: 0.9,
            orth_period: DEFAULT_PERIOD,
            orth_nu: DEFAULT_NU,
            arch_on_train: false,
            oracle_cap: 256,
            random_samples: 5,
            loss: LossKind::CrossEntropy,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn retrain_lr(&self) -> f64 {
        self.retrain_lr.unwrap_or(self.model_lr)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidPenalty(self.eta));
        }
        if !(self.t_end > 0.0 && self.t_end <= self.t_start) || !self.t_start.is_finite() {
            return bad(format!(
                "temperatures must satisfy 0 < t_end <= t_start, got {} -> {}",
                self.t_start, self.t_end
            ));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.epochs_search == 0 || self.epochs_arch == 0 || self.epochs_retrain == 0 {
            return bad("every epoch count must be at least 1".into());
        }
        if !(self.heldout_frac > 0.0 && self.heldout_frac < 1.0) {
            return bad(format!("heldout_frac {} must be in (0, 1)", self.heldout_frac));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        for (name, v) in [
            ("model_lr", self.model_lr),
            ("retrain_lr", self.retrain_lr()),
            ("arch_lr", self.arch_lr),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} must be in [0, 1)", self.momentum));
        }
        if self.orth_period == 0 || !(self.orth_nu > 0.0 && self.orth_nu <= 0.5) {
            return bad(format!(
                "orthogonality schedule needs period >= 1 and nu in (0, 0.5], got {} / {}",
                self.orth_period, self.orth_nu
            ));
        }
        if self.random_samples == 0 {
            return bad("random_samples must be at least 1".into());
        }
        Ok(())
    }
}

/// `T_start · (T_end / T_start)^(step / total)`; `T_end` when `total` is 0.
pub fn anneal_temperature(step: usize, total: usize, t_start: f64, t_end: f64) -> f64 {
    if total == 0 || step >= total {
        return t_end;
    }
    if step == 0 {
        return t_start;
    }
    t_start * (t_end / t_start).powf(step as f64 / total as f64)
}

//! Synthetic datasets with planted structure.
//!
//! - Lagged product: the label of frame `t` is the sign agreement of
//!   channel 0 at `t - k` and `t + k`. Without both taps in the receptive
//!   field a model cannot beat chance.
//! - Planted bottleneck: labels are the argmax of a frozen one-layer
//!   factored teacher whose bottleneck has rank `r`.
//!
//! Every sequence is drawn from the stream `DATA_PART + part`, so a train
//! part and a test part of the same seed are independent but share the
//! teacher.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{streams, Matrix, Rng};
use crate::tdnnf::{model_forward, CandidateSpec, Geometry, LayerChoice, ModelParams, Sequence};

/// Generator identity and parameters, embedded in every dataset file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Generator {
    LaggedProduct {
        lag: usize,
        sequences: usize,
        frames: usize,
        features: usize,
    },
    PlantedBottleneck {
        rank: usize,
        sequences: usize,
        frames: usize,
        features: usize,
        classes: usize,
        teacher_hidden: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub part: u64,
    #[serde(flatten)]
    pub generator: Generator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: usize,
    pub classes: usize,
    pub provenance: Provenance,
    pub sequences: Vec<Sequence>,
}

impl Dataset {
    /// Rebuilds a dataset from its provenance alone.
    pub fn regenerate(p: &Provenance) -> Result<Dataset> {
        match p.generator {
            Generator::LaggedProduct {
                lag,
                sequences,
                frames,
                features,
            } => gen_lagged_product(p.seed, p.part, lag, sequences, frames, features),
            Generator::PlantedBottleneck {
                rank,
                sequences,
                frames,
                features,
                classes,
                teacher_hidden,
            } => gen_planted_bottleneck(
                p.seed,
                p.part,
                &BottleneckTask {
                    rank,
                    features,
                    classes,
                    teacher_hidden,
                },
                sequences,
                frames,
            ),
        }
    }

    /// Dataset holding the sequences at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features,
            classes: self.classes,
            provenance: self.provenance.clone(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
        }
    }

    pub fn supervised_frames(&self) -> usize {
        self.sequences.iter().map(Sequence::supervised_frames).sum()
    }

    /// Number of supervised frames per class.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for s in &self.sequences {
            for (&y, &m) in s.labels.iter().zip(&s.mask) {
                if m {
                    h[y as usize] += 1;
                }
            }
        }
        h
    }
}

/// Standard normal frames, rounded through `f32` so that the dataset file
/// stores them exactly.
fn normal_frames(rng: &mut Rng, frames: usize, features: usize) -> Matrix {
    Matrix::from_fn(frames, features, |_, _| rng.normal() as f32 as f64)
}

/// Frames closer than `left` to the start or `right` to the end are masked
/// out.
fn guard_mask(frames: usize, left: usize, right: usize) -> Vec<bool> {
    (0..frames).map(|t| t >= left && t + right < frames).collect()
}

/// Label of frame `t` is `1` when `x[t-k][0]` and `x[t+k][0]` have the same
/// sign. Frames within `k` of either end are masked out.
pub fn gen_lagged_product(
    seed: u64,
    part: u64,
    lag: usize,
    sequences: usize,
    frames: usize,
    features: usize,
) -> Result<Dataset> {
    if lag == 0 {
        return Err(Error::InvalidDataset("lag must be at least 1".into()));
    }
    if frames <= 2 * lag {
        return Err(Error::InvalidDataset(format!(
            "sequence length {frames} must exceed twice the lag {lag}"
        )));
    }
    if features == 0 || sequences == 0 {
        return Err(Error::InvalidDataset("need at least one feature and one sequence".into()));
    }
    let mut rng = Rng::new(seed, streams::DATA_PART + part);
    let seqs = (0..sequences)
        .map(|_| {
            let x = normal_frames(&mut rng, frames, features);
            let labels = (0..frames)
                .map(|t| {
                    if t < lag || t + lag >= frames {
                        0
                    } else {
                        u32::from(x.get(t - lag, 0) * x.get(t + lag, 0) > 0.0)
                    }
                })
                .collect();
            Sequence::new(x, labels, guard_mask(frames, lag, lag))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        features,
        classes: 2,
        provenance: Provenance {
            seed,
            part,
            generator: Generator::LaggedProduct {
                lag,
                sequences,
                frames,
                features,
            },
        },
        sequences: seqs,
    })
}

/// Shape of the planted-bottleneck teacher.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BottleneckTask {
    pub rank: usize,
    pub features: usize,
    pub classes: usize,
    pub teacher_hidden: usize,
}

/// The frozen teacher: one factored layer with context `{-1,0}` / `{0,1}`
/// and a rank-`rank` bottleneck, followed by a classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Teacher {
    pub spec: CandidateSpec,
    pub params: ModelParams,
}

impl Teacher {
    pub fn label(&self, x: &Matrix) -> Result<Vec<u32>> {
        let logits = model_forward(&self.spec, &self.params, x)?.logits;
        Ok((0..logits.rows())
            .map(|t| crate::numcore::argmax(logits.row(t)) as u32)
            .collect())
    }
}

/// Required share of every class on the probe set; above 5% so that the
/// generated data clears 5% as well.
const MIN_CLASS_SHARE: f64 = 0.07;
const PROBE_SEQUENCES: usize = 32;
const PROBE_FRAMES: usize = 64;
const MAX_BIAS_DRAWS: usize = 1000;

/// Builds the teacher for `seed`. The classifier bias is redrawn until
/// every class receives a fair share of the frames of a probe set.
pub fn planted_teacher(seed: u64, task: &BottleneckTask) -> Result<Teacher> {
    if task.rank == 0 || task.rank > task.features {
        return Err(Error::InvalidDataset(format!(
            "planted rank {} must be in [1, {}]",
            task.rank, task.features
        )));
    }
    if task.classes < 2 || task.teacher_hidden == 0 {
        return Err(Error::InvalidDataset(
            "teacher needs at least two classes and one hidden unit".into(),
        ));
    }
    let spec = CandidateSpec {
        geometry: Geometry {
            input_dim: task.features,
            hidden_dim: task.teacher_hidden,
            classes: task.classes,
            bottleneck: task.rank,
        },
        layers: vec![LayerChoice {
            left: 1,
            right: 1,
            dim: task.rank,
            skip: false,
        }],
    };
    let mut rng = Rng::new(seed, streams::TEACHER);
    let mut params = ModelParams::init(&spec, &mut rng)?;

    let probes: Vec<Matrix> = (0..PROBE_SEQUENCES)
        .map(|_| normal_frames(&mut rng, PROBE_FRAMES, task.features))
        .collect();
    let base: Vec<Matrix> = probes
        .iter()
        .map(|x| Ok(model_forward(&spec, &params, x)?.logits))
        .collect::<Result<_>>()?;
    let spread = {
        let all: Vec<f64> = base.iter().flat_map(|m| m.data().iter().copied()).collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64).sqrt()
    };
    for _ in 0..MAX_BIAS_DRAWS {
        let bias: Vec<f64> = (0..task.classes).map(|_| 0.5 * spread * rng.normal()).collect();
        let mut hist = vec![0usize; task.classes];
        for logits in &base {
            for t in 1..PROBE_FRAMES - 1 {
                let row: Vec<f64> = logits.row(t).iter().zip(&bias).map(|(a, b)| a + b).collect();
                hist[crate::numcore::argmax(&row)] += 1;
            }
        }
        let total = (PROBE_SEQUENCES * (PROBE_FRAMES - 2)) as f64;
        if hist.iter().all(|&c| c as f64 >= MIN_CLASS_SHARE * total) {
            params.classifier_bias = bias;
            return Ok(Teacher { spec, params });
        }
    }
    Err(Error::InvalidDataset(format!(
        "no teacher bias gave every class {}% of frames",
        MIN_CLASS_SHARE * 100.0
    )))
}

/// Frames labelled by [`planted_teacher`]. The first and last frame are
/// masked out (the teacher reads one frame to each side).
pub fn gen_planted_bottleneck(
    seed: u64,
    part: u64,
    task: &BottleneckTask,
    sequences: usize,
    frames: usize,
) -> Result<Dataset> {
    if frames < 3 || sequences == 0 {
        return Err(Error::InvalidDataset(
            "need at least one sequence of three frames".into(),
        ));
    }
    let teacher = planted_teacher(seed, task)?;
    let mut rng = Rng::new(seed, streams::DATA_PART + part);
    let seqs = (0..sequences)
        .map(|_| {
            let x = normal_frames(&mut rng, frames, task.features);
            let labels = teacher.label(&x)?;
            Sequence::new(x, labels, guard_mask(frames, 1, 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        features: task.features,
        classes: task.classes,
        provenance: Provenance {
            seed,
            part,
            generator: Generator::PlantedBottleneck {
                rank: task.rank,
                sequences,
                frames,
                features: task.features,
                classes: task.classes,
                teacher_hidden: task.teacher_hidden,
            },
        },
        sequences: seqs,
    })
}

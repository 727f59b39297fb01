//! Frame accuracy and loss over the supervised frames of a dataset.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tdnnf::{
    correct_frames, model_forward_loss, CandidateSpec, LossKind, ModelParams, Sequence,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub mean_loss: f64,
    pub frames: usize,
    /// Supervised frames per reference class.
    pub class_counts: Vec<usize>,
}

/// Evaluates `params` on every sequence. Sequences are processed in
/// parallel; totals are reduced in sequence order.
pub fn evaluate(
    spec: &CandidateSpec,
    params: &ModelParams,
    sequences: &[Sequence],
    kind: LossKind,
) -> Result<Metrics> {
    let classes = spec.geometry.classes;
    let per_seq: Vec<(f64, usize, usize)> = sequences
        .par_iter()
        .filter(|s| s.supervised_frames() > 0)
        .map(|s| {
            if s.frames.cols() != spec.geometry.input_dim {
                return Err(Error::shape(
                    "evaluate",
                    format!(
                        "data has {} features, model expects {}",
                        s.frames.cols(),
                        spec.geometry.input_dim
                    ),
                ));
            }
            let pass = model_forward_loss(spec, params, s, kind)?;
            let n = s.supervised_frames();
            let correct = correct_frames(&pass.output.logits, &s.labels, &s.mask);
            Ok((pass.loss * n as f64, correct, n))
        })
        .collect::<Result<_>>()?;
    let (mut loss, mut correct, mut frames) = (0.0, 0usize, 0usize);
    for (l, c, n) in per_seq {
        loss += l;
        correct += c;
        frames += n;
    }
    if frames == 0 {
        return Err(Error::NoSupervisedFrames);
    }
    let mut class_counts = vec![0; classes];
    for s in sequences {
        for (&y, &m) in s.labels.iter().zip(&s.mask) {
            if m && (y as usize) < classes {
                class_counts[y as usize] += 1;
            }
        }
    }
    Ok(Metrics {
        accuracy: correct as f64 / frames as f64,
        mean_loss: loss / frames as f64,
        frames,
        class_counts,
    })
}

//! Frame-level losses over masked sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    #[default]
    CrossEntropy,
    /// Squared error against one-hot targets, summed over classes.
    Mse,
}

/// Masked mean loss and its gradient with respect to the logits.
pub fn masked_loss(
    logits: &Matrix,
    labels: &[u32],
    mask: &[bool],
    kind: LossKind,
) -> Result<(f64, Matrix)> {
    let (frames, classes) = logits.shape();
    if labels.len() != frames || mask.len() != frames {
        return Err(Error::shape(
            "loss",
            format!(
                "{frames} frames, {} labels, {} mask entries",
                labels.len(),
                mask.len()
            ),
        ));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::NoSupervisedFrames);
    }
    let inv = 1.0 / count as f64;
    let mut grad = Matrix::zeros(frames, classes);
    let mut total = 0.0;
    for t in (0..frames).filter(|&t| mask[t]) {
        let y = labels[t] as usize;
        if y >= classes {
            return Err(Error::shape(
                "loss",
                format!("label {y} at frame {t} with {classes} classes"),
            ));
        }
        let row = logits.row(t);
        let g = grad.row_mut(t);
        match kind {
            LossKind::CrossEntropy => {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
                total += max + sum.ln() - row[y];
                for (c, gc) in g.iter_mut().enumerate() {
                    let p = (row[c] - max).exp() / sum;
                    *gc = inv * (p - if c == y { 1.0 } else { 0.0 });
                }
            }
            LossKind::Mse => {
                for (c, gc) in g.iter_mut().enumerate() {
                    let d = row[c] - if c == y { 1.0 } else { 0.0 };
                    total += d * d;
                    *gc = inv * 2.0 * d;
                }
            }
        }
    }
    let loss = total * inv;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            what: "loss".into(),
        });
    }
    Ok((loss, grad))
}

/// Number of masked-in frames whose argmax logit equals the label.
pub fn correct_frames(logits: &Matrix, labels: &[u32], mask: &[bool]) -> usize {
    (0..logits.rows())
        .filter(|&t| mask[t] && crate::numcore::argmax(logits.row(t)) == labels[t] as usize)
        .count()
}

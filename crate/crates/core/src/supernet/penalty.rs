//! Expected-size penalty `η Σ_l Σ_i λ_i^l C_i^l` over the searched axes.

use super::arch::{LayerMix, LayerScores};
use super::space::{AxisKind, AxisSet, SearchSpace};
use crate::error::{Error, Result};

/// Penalty value and its gradient with respect to every λ.
pub fn penalty(space: &SearchSpace, mixes: &[LayerMix], eta: f64) -> Result<(f64, Vec<LayerScores>)> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidPenalty(eta));
    }
    if mixes.len() != space.layers.len() {
        return Err(Error::shape("penalty", "mixture layer count differs from the space"));
    }
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(mixes.len());
    for (l, (ls, m)) in space.layers.iter().zip(mixes).enumerate() {
        let costs = space.costs(l);
        let mut g: LayerScores = AxisSet::from_fn(|k| vec![0.0; ls.axis_len(k)]);
        for k in AxisKind::ALL {
            if !ls.is_searched(k) || eta == 0.0 {
                continue;
            }
            let (w, c) = (m.get(k), costs.get(k));
            if w.len() != c.len() {
                return Err(Error::shape("penalty", "weights and costs differ in length").in_layer(l));
            }
            value += eta * w.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            g.get_mut(k)
                .iter_mut()
                .zip(c)
                .for_each(|(gi, ci)| *gi = eta * ci);
        }
        grads.push(g);
    }
    Ok((value, grads))
}

/// `base_loss` plus the penalty, with the penalty's `∂/∂λ`.
pub fn penalized_loss(
    base_loss: f64,
    space: &SearchSpace,
    mixes: &[LayerMix],
    eta: f64,
) -> Result<(f64, Vec<LayerScores>)> {
    let (p, g) = penalty(space, mixes, eta)?;
    Ok((base_loss + p, g))
}

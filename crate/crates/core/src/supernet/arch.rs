//! Architecture weights: one log α vector per axis per layer, and the
//! simplex weights derived from them.

use super::mixture::softmax_logit_grad;
use super::space::{AxisKind, AxisSet, SearchSpace};
use crate::error::{Error, Result};
use crate::numcore::{gumbel, gumbel_softmax_with_noise, softmax, Rng};
use crate::tdnnf::CandidateSpec;

/// Simplex weights λ of one layer, one vector per axis. Fixed axes carry
/// the single weight `[1.0]`.
pub type LayerMix = AxisSet<Vec<f64>>;

/// `∂L/∂λ` of one layer, laid out like [`LayerMix`].
pub type LayerScores = AxisSet<Vec<f64>>;

/// Log-domain architecture parameters. Every axis has a vector as long as
/// its menu; single-entry axes are carried along but never move.
#[derive(Clone, Debug, PartialEq)]
pub struct ArchWeights {
    pub layers: Vec<AxisSet<Vec<f64>>>,
}

impl ArchWeights {
    /// All-zero log α: uniform λ everywhere.
    pub fn uniform(space: &SearchSpace) -> Self {
        ArchWeights {
            layers: space
                .layers
                .iter()
                .map(|ls| AxisSet::from_fn(|k| vec![0.0; ls.axis_len(k)]))
                .collect(),
        }
    }

    pub fn check(&self, space: &SearchSpace) -> Result<()> {
        if self.layers.len() != space.layers.len() {
            return Err(Error::shape(
                "architecture weights",
                format!("{} layers for a {}-layer space", self.layers.len(), space.layers.len()),
            ));
        }
        for (l, (a, ls)) in self.layers.iter().zip(&space.layers).enumerate() {
            for (k, v) in a.iter() {
                if v.len() != ls.axis_len(k) {
                    return Err(Error::shape(
                        "architecture weights",
                        format!("{} weights for a {}-entry {} menu", v.len(), ls.axis_len(k), k.name()),
                    )
                    .in_layer(l));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        what: format!("log alpha ({} axis)", k.name()),
                    }
                    .in_layer(l));
                }
            }
        }
        Ok(())
    }

    pub fn softmax_mix(&self) -> Result<Vec<LayerMix>> {
        self.layers
            .iter()
            .map(|a| {
                Ok(AxisSet {
                    left: softmax(&a.left)?,
                    right: softmax(&a.right)?,
                    dim: softmax(&a.dim)?,
                    skip: softmax(&a.skip)?,
                })
            })
            .collect()
    }

    /// Fresh Gumbel noise, drawn layer by layer and axis by axis. Fixed
    /// axes consume no random numbers.
    pub fn sample_noise(&self, rng: &mut Rng) -> Vec<AxisSet<Vec<f64>>> {
        self.layers
            .iter()
            .map(|a| {
                a.map(|_, v| {
                    if v.len() < 2 {
                        vec![0.0; v.len()]
                    } else {
                        v.iter().map(|_| gumbel(rng.uniform_open())).collect()
                    }
                })
            })
            .collect()
    }

    pub fn gumbel_mix(
        &self,
        noise: &[AxisSet<Vec<f64>>],
        temperature: f64,
    ) -> Result<Vec<LayerMix>> {
        if noise.len() != self.layers.len() {
            return Err(Error::shape("gumbel_mix", "noise layer count differs"));
        }
        self.layers
            .iter()
            .zip(noise)
            .map(|(a, n)| {
                Ok(AxisSet {
                    left: gumbel_softmax_with_noise(&a.left, &n.left, temperature)?,
                    right: gumbel_softmax_with_noise(&a.right, &n.right, temperature)?,
                    dim: gumbel_softmax_with_noise(&a.dim, &n.dim, temperature)?,
                    skip: gumbel_softmax_with_noise(&a.skip, &n.skip, temperature)?,
                })
            })
            .collect()
    }

    pub fn zeros_like(&self) -> Self {
        ArchWeights {
            layers: self
                .layers
                .iter()
                .map(|a| a.map(|_, v| vec![0.0; v.len()]))
                .collect(),
        }
    }

    /// Every log α vector, layer-major, axes in [`AxisKind::ALL`] order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|a| [&a.left[..], &a.right[..], &a.dim[..], &a.skip[..]])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|a| {
                [
                    &mut a.left[..],
                    &mut a.right[..],
                    &mut a.dim[..],
                    &mut a.skip[..],
                ]
            })
            .collect()
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &ArchWeights, alpha: f64) {
        for (d, s) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, &b) in d.iter_mut().zip(s) {
                *a += alpha * b;
            }
        }
    }
}

/// One-hot weights selecting `spec` in `space`.
pub fn one_hot_mix(space: &SearchSpace, spec: &CandidateSpec) -> Result<Vec<LayerMix>> {
    if !space.contains(spec) {
        return Err(Error::InvalidCandidate("candidate not in the search space".into()));
    }
    Ok(space
        .layers
        .iter()
        .zip(&spec.layers)
        .map(|(ls, c)| {
            let idx = ls.indices_of(c).expect("membership checked");
            AxisSet::from_fn(|k| {
                let mut v = vec![0.0; ls.axis_len(k)];
                v[*idx.get(k)] = 1.0;
                v
            })
        })
        .collect())
}

/// Chains `∂L/∂λ` through `λ = softmax((log α + noise) / T)` for every axis
/// and accumulates `scale` times the result into `out`.
pub fn accumulate_logit_grads(
    mixes: &[LayerMix],
    scores: &[LayerScores],
    temperature: f64,
    scale: f64,
    out: &mut ArchWeights,
) {
    for ((m, s), o) in mixes.iter().zip(scores).zip(&mut out.layers) {
        for k in AxisKind::ALL {
            let g = softmax_logit_grad(m.get(k), s.get(k), temperature);
            for (a, b) in o.get_mut(k).iter_mut().zip(g) {
                *a += scale * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::streams;
    use crate::supernet::space::LayerSpace;
    use crate::tdnnf::Geometry;

    fn space() -> SearchSpace {
        SearchSpace::uniform(
            Geometry { input_dim: 4, hidden_dim: 4, classes: 2, bottleneck: 2 },
            2,
            LayerSpace { left: vec![0, 1, 2], right: vec![0, 2], dims: vec![2], skip: vec![false, true] },
        )
    }

    #[test]
    fn uniform_weights_are_uniform() {
        let s = space();
        let mix = ArchWeights::uniform(&s).softmax_mix().unwrap();
        assert_eq!(mix[1].left, vec![1.0 / 3.0; 3]);
        assert_eq!(mix[0].dim, vec![1.0]);
    }

    #[test]
    fn constant_shift_leaves_weights_unchanged() {
        let s = space();
        let mut rng = Rng::new(1, streams::INIT);
        let mut a = ArchWeights::uniform(&s);
        a.tensors_mut().into_iter().flatten().for_each(|v| *v = rng.normal());
        let before = a.softmax_mix().unwrap();
        a.tensors_mut().into_iter().flatten().for_each(|v| *v += 17.5);
        let after = a.softmax_mix().unwrap();
        for (x, y) in before.iter().zip(&after) {
            for k in AxisKind::ALL {
                for (p, q) in x.get(k).iter().zip(y.get(k)) {
                    assert!((p - q).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fixed_axes_draw_no_noise() {
        let s = space();
        let a = ArchWeights::uniform(&s);
        let mut r1 = Rng::new(2, streams::GUMBEL);
        let n = a.sample_noise(&mut r1);
        assert_eq!(n[0].dim, vec![0.0]);
        let mut r2 = Rng::new(2, streams::GUMBEL);
        // left (3) + right (2) + skip (2) draws per layer
        for _ in 0..14 {
            r2.uniform_open();
        }
        assert_eq!(r1.next_u64(), r2.next_u64());
    }

    #[test]
    fn one_hot_mix_selects_candidate() {
        let s = space();
        let c = s.candidate(5).unwrap();
        let mix = one_hot_mix(&s, &c).unwrap();
        for (ls, (m, choice)) in s.layers.iter().zip(mix.iter().zip(&c.layers)) {
            let idx = ls.indices_of(choice).unwrap();
            for k in AxisKind::ALL {
                assert_eq!(m.get(k)[*idx.get(k)], 1.0);
                assert_eq!(m.get(k).iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let s = space();
        let mut a = ArchWeights::uniform(&s);
        a.layers[1].left.pop();
        assert!(a.check(&s).unwrap_err().to_string().starts_with("layer 1:"));
    }
}

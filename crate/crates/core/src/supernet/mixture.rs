//! Weighted mixtures of candidate outputs and the gradients of a loss with
//! respect to the log-domain mixture weights.
//!
//! For `h = Σ_i λ_i o_i` with `λ = softmax((log α + g) / T)`:
//!
//! ```text
//! ∂L/∂log α_k = (1/T) · λ_k · (s_k − Σ_i λ_i s_i),   s_i = ⟨∂L/∂h, o_i⟩
//! ```
//!
//! The softmax case is `g = 0, T = 1`; the Gumbel case averages the
//! expression over the drawn samples.

use crate::error::{Error, Result};
use crate::numcore::Matrix;

const SIMPLEX_TOL: f64 = 1e-9;

/// Rejects weight vectors that are not a probability simplex within 1e-9.
pub fn check_simplex(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::EmptyLogits);
    }
    let sum: f64 = weights.iter().sum();
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    if !sum.is_finite() || (sum - 1.0).abs() > SIMPLEX_TOL || min < -SIMPLEX_TOL {
        return Err(Error::OffSimplex { sum, min });
    }
    Ok(())
}

/// Gradient with respect to the logits of `softmax(logits / temperature)`,
/// given `scores = ∂L/∂λ` at `weights = λ`.
///
/// Evaluated as `λ_k Σ_i λ_i (s_k − s_i) / T`, which is exactly zero when
/// all scores agree.
pub fn softmax_logit_grad(weights: &[f64], scores: &[f64], temperature: f64) -> Vec<f64> {
    weights
        .iter()
        .zip(scores)
        .map(|(wk, sk)| {
            let spread: f64 = weights.iter().zip(scores).map(|(wi, si)| wi * (sk - si)).sum();
            wk * spread / temperature
        })
        .collect()
}

/// Candidate outputs and weights retained by [`mixture_forward`].
#[derive(Clone, Debug, Default)]
pub struct MixtureCache {
    weights: Vec<f64>,
    outputs: Vec<Matrix>,
}

impl MixtureCache {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `⟨grad, o_i⟩` for every candidate output.
    pub fn scores(&self, grad: &Matrix) -> Result<Vec<f64>> {
        if self.outputs.is_empty() {
            return Err(Error::MissingCache("mixture"));
        }
        self.outputs
            .iter()
            .map(|o| {
                if o.shape() != grad.shape() {
                    return Err(Error::shape(
                        "mixture gradient",
                        format!("gradient {:?} vs output {:?}", grad.shape(), o.shape()),
                    ));
                }
                Ok(o.inner(grad))
            })
            .collect()
    }
}

/// `Σ_i weights_i · outputs_i`.
pub fn mixture_forward(weights: &[f64], outputs: Vec<Matrix>) -> Result<(Matrix, MixtureCache)> {
    check_simplex(weights)?;
    if outputs.len() != weights.len() {
        return Err(Error::shape(
            "mixture",
            format!("{} weights for {} candidates", weights.len(), outputs.len()),
        ));
    }
    let (r, c) = outputs[0].shape();
    let mut h = Matrix::zeros(r, c);
    for (w, o) in weights.iter().zip(&outputs) {
        h.axpy(*w, o)
            .map_err(|_| Error::shape("mixture", "candidate outputs differ in shape"))?;
    }
    Ok((
        h,
        MixtureCache {
            weights: weights.to_vec(),
            outputs,
        },
    ))
}

/// Gradient with respect to log α when the weights were `softmax(log α)`.
pub fn arch_grad_softmax(grad_h: &Matrix, cache: &MixtureCache) -> Result<Vec<f64>> {
    let scores = cache.scores(grad_h)?;
    Ok(softmax_logit_grad(&cache.weights, &scores, 1.0))
}

/// Gradient with respect to log α averaged over Gumbel-Softmax samples,
/// one `(grad_h, cache)` pair per sample.
pub fn arch_grad_gumbel(
    grads_h: &[Matrix],
    caches: &[MixtureCache],
    temperature: f64,
) -> Result<Vec<f64>> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidTemperature(temperature));
    }
    if caches.is_empty() {
        return Err(Error::MissingCache("gumbel samples"));
    }
    if grads_h.len() != caches.len() {
        return Err(Error::shape(
            "arch_grad_gumbel",
            format!("{} gradients for {} samples", grads_h.len(), caches.len()),
        ));
    }
    let n = caches[0].weights.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / caches.len() as f64;
    for (g, cache) in grads_h.iter().zip(caches) {
        if cache.weights.len() != n {
            return Err(Error::shape("arch_grad_gumbel", "samples disagree on candidate count"));
        }
        let scores = cache.scores(g)?;
        for (o, v) in out
            .iter_mut()
            .zip(softmax_logit_grad(&cache.weights, &scores, temperature))
        {
            *o += inv * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{
        finite_diff_grad, gumbel_softmax_sample, gumbel_softmax_with_noise, max_relative_error,
        softmax, streams, Rng,
    };

    fn rand_mat(rng: &mut Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.normal())
    }

    #[test]
    fn one_hot_selects_candidate() {
        let mut rng = Rng::new(1, streams::INIT);
        let outs: Vec<Matrix> = (0..3).map(|_| rand_mat(&mut rng, 4, 2)).collect();
        let (h, _) = mixture_forward(&[0.0, 1.0, 0.0], outs.clone()).unwrap();
        assert_eq!(h, outs[1]);
    }

    #[test]
    fn identical_candidates_are_unchanged_by_mixing() {
        let o = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let (h, _) = mixture_forward(&[0.5, 0.5], vec![o.clone(), o.clone()]).unwrap();
        assert_eq!(h, o);
    }

    #[test]
    fn three_way_hand_combination() {
        let a = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = Matrix::from_rows(&[&[2.0, 2.0], &[0.0, 0.0]]);
        let c = Matrix::from_rows(&[&[0.0, -1.0], &[4.0, 1.0]]);
        let (h, _) = mixture_forward(&[0.2, 0.3, 0.5], vec![a, b, c]).unwrap();
        let want = [0.8, 0.1, 2.0, 0.7];
        for (x, y) in h.data().iter().zip(want) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn off_simplex_rejected() {
        let o = Matrix::zeros(1, 1);
        assert!(matches!(
            mixture_forward(&[0.6, 0.6], vec![o.clone(), o.clone()]),
            Err(Error::OffSimplex { .. })
        ));
        assert!(mixture_forward(&[1.1, -0.1], vec![o.clone(), o]).is_err());
    }

    #[test]
    fn identical_outputs_give_zero_gradient() {
        let o = Matrix::from_rows(&[&[1.0, 2.0]]);
        let (_, cache) = mixture_forward(&[0.3, 0.7], vec![o.clone(), o]).unwrap();
        let g = arch_grad_softmax(&Matrix::from_rows(&[&[0.4, -1.0]]), &cache).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn two_way_hand_gradient() {
        let o0 = Matrix::from_rows(&[&[3.0]]);
        let o1 = Matrix::from_rows(&[&[-1.0]]);
        let g = Matrix::from_rows(&[&[2.0]]);
        let (_, cache) = mixture_forward(&[0.5, 0.5], vec![o0, o1]).unwrap();
        let grad = arch_grad_softmax(&g, &cache).unwrap();
        // 0.25 * g * (o0 - o1) = 0.25 * 2 * 4
        assert_eq!(grad, vec![2.0, -2.0]);
    }

    #[test]
    fn empty_cache_rejected() {
        let err = arch_grad_softmax(&Matrix::zeros(1, 1), &MixtureCache::default()).unwrap_err();
        assert!(matches!(err, Error::MissingCache(_)));
        assert!(arch_grad_gumbel(&[], &[], 1.0).is_err());
    }

    /// `L = Σ_t c_t · tanh(h)_t` for fixed coefficients: non-linear in λ so
    /// the finite-difference check exercises more than a linear form.
    fn probe(h: &Matrix, coef: &Matrix) -> (f64, Matrix) {
        let mut g = Matrix::zeros(h.rows(), h.cols());
        let mut l = 0.0;
        for i in 0..h.data().len() {
            let t = h.data()[i].tanh();
            l += coef.data()[i] * t;
            g.data_mut()[i] = coef.data()[i] * (1.0 - t * t);
        }
        (l, g)
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        let mut rng = Rng::new(2, streams::INIT);
        let outs: Vec<Matrix> = (0..4).map(|_| rand_mat(&mut rng, 5, 3)).collect();
        let coef = rand_mat(&mut rng, 5, 3);
        let la: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let loss = |la: &[f64]| {
            let (h, _) = mixture_forward(&softmax(la).unwrap(), outs.clone()).unwrap();
            probe(&h, &coef).0
        };
        let (h, cache) = mixture_forward(&softmax(&la).unwrap(), outs.clone()).unwrap();
        let g = arch_grad_softmax(&probe(&h, &coef).1, &cache).unwrap();
        let num = finite_diff_grad(loss, &la, 1e-6).unwrap();
        assert!(max_relative_error(&g, &num, 1e-8) < 1e-5);
    }

    #[test]
    fn gumbel_reduces_to_softmax_with_zero_noise() {
        let mut rng = Rng::new(3, streams::INIT);
        let outs: Vec<Matrix> = (0..3).map(|_| rand_mat(&mut rng, 2, 2)).collect();
        let g = rand_mat(&mut rng, 2, 2);
        let la = [0.2, -0.4, 1.0];
        let w = gumbel_softmax_with_noise(&la, &[0.0; 3], 1.0).unwrap();
        let (_, cache) = mixture_forward(&w, outs).unwrap();
        let a = arch_grad_softmax(&g, &cache).unwrap();
        let b = arch_grad_gumbel(&[g], &[cache], 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gumbel_gradient_matches_finite_differences_with_frozen_noise() {
        let mut rng = Rng::new(4, streams::INIT);
        let outs: Vec<Matrix> = (0..3).map(|_| rand_mat(&mut rng, 4, 2)).collect();
        let coef = rand_mat(&mut rng, 4, 2);
        let la: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let t = 0.7;
        let mut grng = Rng::new(4, streams::GUMBEL);
        let noises: Vec<Vec<f64>> = (0..4)
            .map(|_| gumbel_softmax_sample(&la, t, &mut grng).unwrap().noise)
            .collect();
        let loss = |la: &[f64]| {
            noises
                .iter()
                .map(|n| {
                    let w = gumbel_softmax_with_noise(la, n, t).unwrap();
                    probe(&mixture_forward(&w, outs.clone()).unwrap().0, &coef).0
                })
                .sum::<f64>()
                / noises.len() as f64
        };
        let mut grads = Vec::new();
        let mut caches = Vec::new();
        for n in &noises {
            let w = gumbel_softmax_with_noise(&la, n, t).unwrap();
            let (h, cache) = mixture_forward(&w, outs.clone()).unwrap();
            grads.push(probe(&h, &coef).1);
            caches.push(cache);
        }
        let g = arch_grad_gumbel(&grads, &caches, t).unwrap();
        let num = finite_diff_grad(loss, &la, 1e-6).unwrap();
        assert!(max_relative_error(&g, &num, 1e-8) < 1e-5);
    }
}

//! Softmax and Gumbel-Softmax relaxations of a categorical choice.

use super::rng::Rng;
use crate::error::{Error, Result};

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyLogits);
    }
    if let Some(bad) = logits.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: format!("logit {bad}"),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    Ok(out)
}

/// `-ln(-ln u)` for `u` in (0, 1).
#[inline]
pub fn gumbel(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// One relaxed categorical draw: the Gumbel noise that was used and the
/// resulting simplex weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GumbelSample {
    pub noise: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GumbelSample {
    pub fn argmax(&self) -> usize {
        argmax(&self.weights)
    }
}

/// `softmax((log_alpha + noise) / temperature)` for a fixed noise vector.
pub fn gumbel_softmax_with_noise(
    log_alpha: &[f64],
    noise: &[f64],
    temperature: f64,
) -> Result<Vec<f64>> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidTemperature(temperature));
    }
    if noise.len() != log_alpha.len() {
        return Err(Error::shape(
            "gumbel_softmax",
            format!("{} noise values for {} logits", noise.len(), log_alpha.len()),
        ));
    }
    let scaled: Vec<f64> = log_alpha
        .iter()
        .zip(noise)
        .map(|(a, g)| (a + g) / temperature)
        .collect();
    softmax(&scaled)
}

/// Draws one Gumbel-Softmax sample for the given log-domain weights.
pub fn gumbel_softmax_sample(
    log_alpha: &[f64],
    temperature: f64,
    rng: &mut Rng,
) -> Result<GumbelSample> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidTemperature(temperature));
    }
    if log_alpha.is_empty() {
        return Err(Error::EmptyLogits);
    }
    let noise: Vec<f64> = (0..log_alpha.len())
        .map(|_| gumbel(rng.uniform_open()))
        .collect();
    let weights = gumbel_softmax_with_noise(log_alpha, &noise, temperature)?;
    Ok(GumbelSample { noise, weights })
}

/// Index of the largest value; first one wins on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

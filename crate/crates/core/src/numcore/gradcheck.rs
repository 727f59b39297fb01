//! Central finite differences, the reference every analytic backward
//! pass is checked against.

use crate::error::{Error, Result};

/// `(L(p + eps e_i) - L(p - eps e_i)) / (2 eps)` for every coordinate.
///
/// `loss_fn` must be deterministic: any randomness inside it has to be
/// replayed identically on every call.
pub fn finite_diff_grad<F>(mut loss_fn: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = params.to_vec();
    let mut grads = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let plus = loss_fn(&p);
        p[i] = orig - eps;
        let minus = loss_fn(&p);
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite {
                what: format!("loss at coordinate {i}"),
            });
        }
        grads.push((plus - minus) / (2.0 * eps));
    }
    Ok(grads)
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over two gradient vectors.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let g = finite_diff_grad(|p| p[0] * p[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let g = finite_diff_grad(|_| 4.2, &[1.0, -3.0, 0.5], 1e-4).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let r = finite_diff_grad(|p| (p[0] - 1.0).ln(), &[1.0], 1e-3);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }
}

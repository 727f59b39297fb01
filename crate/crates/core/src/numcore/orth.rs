//! Iterative semi-orthogonal projection.
//!
//! `W <- W - nu * W (WᵀW - I)` moves every singular value `s` of `W` to
//! `s - nu * s (s² - 1)`, a contraction towards 1 for well-conditioned
//! matrices. Applied periodically it keeps the linear factor of each
//! factored layer close to column-orthonormal.

use super::matrix::Matrix;
use super::rng::Rng;
use crate::error::{Error, Result};

/// Default step size and period used during training.
pub const DEFAULT_NU: f64 = 0.125;
pub const DEFAULT_PERIOD: usize = 4;

pub fn semi_orthogonal_step(w: &Matrix, nu: f64) -> Result<Matrix> {
    if w.cols() > w.rows() {
        return Err(Error::NotColumnOrthonormal {
            rows: w.rows(),
            cols: w.cols(),
        });
    }
    if !(nu > 0.0 && nu <= 0.5) {
        return Err(Error::InvalidStepSize(nu));
    }
    let mut gram = w.matmul_tn(w)?;
    for i in 0..gram.cols() {
        let v = gram.get(i, i);
        gram.set(i, i, v - 1.0);
    }
    let mut out = w.clone();
    out.add_matmul(-nu, w, &gram)?;
    Ok(out)
}

/// Projects whichever Gram matrix is smaller: column-orthonormal when
/// `cols <= rows`, row-orthonormal otherwise.
pub fn semi_orthogonal_step_any(w: &Matrix, nu: f64) -> Result<Matrix> {
    if w.cols() <= w.rows() {
        semi_orthogonal_step(w, nu)
    } else {
        Ok(semi_orthogonal_step(&w.transpose(), nu)?.transpose())
    }
}

/// `‖WᵀW - I‖_F` (or `‖WWᵀ - I‖_F` for wide matrices).
pub fn orthonormality_defect(w: &Matrix) -> f64 {
    let gram = if w.cols() <= w.rows() {
        w.matmul_tn(w)
    } else {
        w.matmul_nt(w)
    }
    .expect("gram shapes always agree");
    let mut s = 0.0;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let d = gram.get(i, j) - if i == j { 1.0 } else { 0.0 };
            s += d * d;
        }
    }
    s.sqrt()
}

/// Random matrix with orthonormal columns (or rows, when wide), built by
/// modified Gram-Schmidt on a Gaussian draw. Every leading column subset
/// of the result is itself orthonormal.
pub fn random_semi_orthogonal(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    if cols > rows {
        return random_semi_orthogonal(cols, rows, rng).transpose();
    }
    let mut w = Matrix::from_fn(rows, cols, |_, _| rng.normal());
    for j in 0..cols {
        for k in 0..j {
            let proj: f64 = (0..rows).map(|r| w.get(r, j) * w.get(r, k)).sum();
            for r in 0..rows {
                let v = w.get(r, j) - proj * w.get(r, k);
                w.set(r, j, v);
            }
        }
        let norm: f64 = (0..rows).map(|r| w.get(r, j).powi(2)).sum::<f64>().sqrt();
        for r in 0..rows {
            let v = w.get(r, j) / norm;
            w.set(r, j, v);
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::rng::streams;

    #[test]
    fn orthonormal_matrix_is_a_fixed_point() {
        let mut rng = Rng::new(3, streams::INIT);
        let w = random_semi_orthogonal(10, 4, &mut rng);
        let stepped = semi_orthogonal_step(&w, 0.125).unwrap();
        for (a, b) in w.data().iter().zip(stepped.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_identity_hand_value() {
        let w = Matrix::from_fn(3, 3, |r, c| if r == c { 2.0 } else { 0.0 });
        let s = semi_orthogonal_step(&w, 0.125).unwrap();
        for i in 0..3 {
            assert!((s.get(i, i) - 1.25).abs() < 1e-15);
        }
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn random_tall_matrix_converges() {
        let mut rng = Rng::new(11, streams::INIT);
        let mut w = Matrix::from_fn(16, 4, |_, _| rng.normal() / 4.0);
        for _ in 0..100 {
            w = semi_orthogonal_step(&w, 0.125).unwrap();
        }
        assert!(orthonormality_defect(&w) < 1e-3, "{}", orthonormality_defect(&w));
    }

    #[test]
    fn wide_matrix_rejected() {
        let w = Matrix::zeros(2, 3);
        let err = semi_orthogonal_step(&w, 0.125).unwrap_err();
        assert!(err.to_string().contains("cannot be column-orthonormal"));
        assert!(semi_orthogonal_step_any(&w, 0.125).is_ok());
    }

    #[test]
    fn defect_never_increases_near_orthonormal() {
        let mut rng = Rng::new(5, streams::INIT);
        for trial in 0..200 {
            let base = random_semi_orthogonal(12, 5, &mut rng);
            let scale = 0.02 + 0.1 * (trial % 5) as f64;
            let mut w = base.clone();
            w.data_mut().iter_mut().for_each(|v| *v += scale * rng.normal() / 3.0);
            let gram_err = {
                let g = w.matmul_tn(&w).unwrap();
                let diff = g.data().iter().enumerate().map(|(i, v)| {
                    let (r, c) = (i / 5, i % 5);
                    v - if r == c { 1.0 } else { 0.0 }
                });
                // Frobenius bounds the spectral norm from above.
                diff.map(|d| d * d).sum::<f64>().sqrt()
            };
            if gram_err >= 1.0 {
                continue;
            }
            for nu in [0.05, 0.125, 0.25] {
                let before = orthonormality_defect(&w);
                let after = orthonormality_defect(&semi_orthogonal_step(&w, nu).unwrap());
                assert!(after <= before + 1e-12, "nu={nu}: {before} -> {after}");
            }
        }
    }

    #[test]
    fn leading_columns_of_random_orthonormal_are_orthonormal() {
        let mut rng = Rng::new(9, streams::INIT);
        let w = random_semi_orthogonal(20, 8, &mut rng);
        for k in 1..=8 {
            assert!(orthonormality_defect(&w.leading_columns(k)) < 1e-12);
        }
    }
}

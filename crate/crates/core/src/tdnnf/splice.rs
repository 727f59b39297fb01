//! Temporal splicing with edge replication.
//!
//! Row `t` of a spliced sequence concatenates the source rows
//! `clamp(t + o, 0, T - 1)` for every offset `o`. The backward pass
//! scatter-adds into the same clamped rows, which makes it the exact
//! adjoint of the forward map.

use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[inline]
pub(crate) fn clamp_frame(t: usize, offset: isize, frames: usize) -> usize {
    (t as isize + offset).clamp(0, frames as isize - 1) as usize
}

pub fn splice(seq: &Matrix, offsets: &[isize]) -> Result<Matrix> {
    if offsets.is_empty() {
        return Err(Error::shape("splice", "empty offset list"));
    }
    let (frames, dim) = seq.shape();
    if frames == 0 {
        return Err(Error::shape("splice", "empty sequence"));
    }
    let mut out = Matrix::zeros(frames, dim * offsets.len());
    for t in 0..frames {
        let row = out.row_mut(t);
        for (k, &o) in offsets.iter().enumerate() {
            row[k * dim..(k + 1) * dim].copy_from_slice(seq.row(clamp_frame(t, o, frames)));
        }
    }
    Ok(out)
}

/// Adjoint of [`splice`]: gradient with respect to the unspliced input.
pub fn splice_backward(grad: &Matrix, offsets: &[isize]) -> Result<Matrix> {
    if offsets.is_empty() {
        return Err(Error::shape("splice_backward", "empty offset list"));
    }
    let (frames, width) = grad.shape();
    if width % offsets.len() != 0 {
        return Err(Error::shape(
            "splice_backward",
            format!("width {width} not divisible by {} taps", offsets.len()),
        ));
    }
    let dim = width / offsets.len();
    let mut out = Matrix::zeros(frames, dim);
    for t in 0..frames {
        for (k, &o) in offsets.iter().enumerate() {
            let src = clamp_frame(t, o, frames);
            let g = &grad.row(t)[k * dim..(k + 1) * dim];
            for (a, &b) in out.row_mut(src).iter_mut().zip(g) {
                *a += b;
            }
        }
    }
    Ok(out)
}

/// Single-offset splice: row `t` is `seq[clamp(t + offset)]`.
pub fn shift_rows(seq: &Matrix, offset: isize) -> Matrix {
    let (frames, dim) = seq.shape();
    if offset == 0 {
        return seq.clone();
    }
    let mut out = Matrix::zeros(frames, dim);
    for t in 0..frames {
        out.row_mut(t).copy_from_slice(seq.row(clamp_frame(t, offset, frames)));
    }
    out
}

/// `acc[clamp(t + offset)] += alpha * grad[t]` for every frame.
pub fn shift_rows_backward_into(acc: &mut Matrix, grad: &Matrix, offset: isize, alpha: f64) {
    let frames = grad.rows();
    debug_assert_eq!(acc.shape(), grad.shape());
    for t in 0..frames {
        let src = clamp_frame(t, offset, frames);
        for (a, &b) in acc.row_mut(src).iter_mut().zip(grad.row(t)) {
            *a += alpha * b;
        }
    }
}

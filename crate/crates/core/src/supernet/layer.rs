//! Mixture forward and backward through one supernet layer.
//!
//! The layer stores one linear block `A_o` per left offset and one affine
//! block `B_o` per right offset, each at the widest bottleneck. Each axis
//! is mixed at the point where its candidates differ:
//!
//! ```text
//! b = Σ_i λ^left_i  Σ_{o ∈ taps(c_i)} shift(x, o) A_o
//! u = Σ_j λ^dim_j   b[:, 0..n_j]              (zero beyond n_j)
//! z = Σ_i λ^right_i Σ_{o ∈ taps(d_i)} shift(u, o) B_oᵀ + bias
//! y = ReLU(z)
//! out = Σ_i λ^skip_i (y + skip_i · x)
//! ```
//!
//! With one-hot weights every line reduces to the standalone factored
//! layer built from the corresponding sub-blocks.

use super::arch::{LayerMix, LayerScores};
use super::mixture::check_simplex;
use super::space::{AxisKind, AxisSet, LayerSpace};
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::tdnnf::splice::{shift_rows, shift_rows_backward_into};
use crate::tdnnf::LayerParams;

#[derive(Clone, Debug)]
pub struct SupernetLayerCache {
    fingerprint: u64,
    with_scores: bool,
    x: Matrix,
    left_w: Vec<f64>,
    right_w: Vec<f64>,
    col_w: Vec<f64>,
    /// `shift(x, o) A_o` per left offset; `None` where it was not needed.
    p: Vec<Option<Matrix>>,
    b: Matrix,
    shifted_u: Vec<Option<Matrix>>,
    q: Vec<Option<Matrix>>,
    z: Matrix,
    y: Matrix,
    skip_w: f64,
}

/// Per-offset tap weight: the total λ of the candidates that use the tap.
fn tap_weights(offsets: &[isize], values: &[usize], weights: &[f64], sign: isize) -> Vec<f64> {
    offsets
        .iter()
        .map(|&o| {
            if o == 0 {
                1.0
            } else {
                values
                    .iter()
                    .zip(weights)
                    .filter(|(&v, _)| sign * v as isize == o)
                    .map(|(_, &w)| w)
                    .sum()
            }
        })
        .collect()
}

fn check_layer(x: &Matrix, params: &LayerParams, menu: &LayerSpace, mix: &LayerMix) -> Result<()> {
    for k in AxisKind::ALL {
        if mix.get(k).len() != menu.axis_len(k) {
            return Err(Error::shape(
                "supernet layer",
                format!(
                    "{} weights for a {}-entry {} menu",
                    mix.get(k).len(),
                    menu.axis_len(k),
                    k.name()
                ),
            ));
        }
        check_simplex(mix.get(k))?;
    }
    if params.left_offsets != menu.left_union()
        || params.right_offsets != menu.right_union()
        || params.bottleneck() != menu.max_dim()
    {
        return Err(Error::shape("supernet layer", "parameters do not match the menus"));
    }
    if x.cols() != params.input_dim() || x.rows() == 0 {
        return Err(Error::shape(
            "supernet layer",
            format!("input {:?}, layer expects {} features", x.shape(), params.input_dim()),
        ));
    }
    if menu.skip.contains(&true) && params.input_dim() != params.output_dim() {
        return Err(Error::shape("supernet layer", "skip connection needs equal widths"));
    }
    Ok(())
}

/// Mixture forward. With `with_scores` every candidate branch is evaluated
/// so the backward pass can report `∂L/∂λ`; otherwise branches with zero
/// weight are skipped.
pub fn supernet_layer_forward(
    x: &Matrix,
    params: &LayerParams,
    menu: &LayerSpace,
    mix: &LayerMix,
    with_scores: bool,
) -> Result<(Matrix, SupernetLayerCache)> {
    check_layer(x, params, menu, mix)?;
    let frames = x.rows();
    let n_max = params.bottleneck();

    let left_w = tap_weights(&params.left_offsets, &menu.left, &mix.left, -1);
    let mut p = Vec::with_capacity(left_w.len());
    let mut b = Matrix::zeros(frames, n_max);
    for (k, &o) in params.left_offsets.iter().enumerate() {
        if left_w[k] == 0.0 && !with_scores {
            p.push(None);
            continue;
        }
        let pk = shift_rows(x, o).matmul(&params.linear_block(k))?;
        b.axpy(left_w[k], &pk)?;
        p.push(Some(pk));
    }

    let col_w: Vec<f64> = (0..n_max)
        .map(|c| {
            menu.dims
                .iter()
                .zip(&mix.dim)
                .filter(|(&n, _)| n > c)
                .map(|(_, &w)| w)
                .sum()
        })
        .collect();
    let mut u = b.clone();
    for t in 0..frames {
        for (v, w) in u.row_mut(t).iter_mut().zip(&col_w) {
            *v *= w;
        }
    }

    let right_w = tap_weights(&params.right_offsets, &menu.right, &mix.right, 1);
    let mut z = Matrix::zeros(frames, params.output_dim());
    for t in 0..frames {
        z.row_mut(t).copy_from_slice(&params.bias);
    }
    let mut shifted_u = Vec::with_capacity(right_w.len());
    let mut q = Vec::with_capacity(right_w.len());
    for (k, &o) in params.right_offsets.iter().enumerate() {
        if right_w[k] == 0.0 && !with_scores {
            shifted_u.push(None);
            q.push(None);
            continue;
        }
        let su = shift_rows(&u, o);
        let qk = su.matmul_nt(&params.affine_block(k))?;
        z.axpy(right_w[k], &qk)?;
        shifted_u.push(Some(su));
        q.push(if with_scores { Some(qk) } else { None });
    }

    let mut y = z.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    let skip_w: f64 = menu
        .skip
        .iter()
        .zip(&mix.skip)
        .filter(|(&s, _)| s)
        .map(|(_, &w)| w)
        .sum();
    let mut out = y.clone();
    if skip_w != 0.0 {
        out.axpy(skip_w, x)?;
    }
    let cache = SupernetLayerCache {
        fingerprint: params.fingerprint(),
        with_scores,
        x: x.clone(),
        left_w,
        right_w,
        col_w,
        p,
        b,
        shifted_u,
        q,
        z,
        y,
        skip_w,
    };
    Ok((out, cache))
}

fn add_block(dst: &mut Matrix, block: usize, src: &Matrix, alpha: f64) {
    let len = src.data().len();
    let d = &mut dst.data_mut()[block * len..(block + 1) * len];
    for (a, &b) in d.iter_mut().zip(src.data()) {
        *a += alpha * b;
    }
}

/// Backward pass. Accumulates parameter gradients into `grads` when given
/// and returns the input gradient together with `∂L/∂λ` (all zeros unless
/// the forward pass ran with scores).
pub fn supernet_layer_backward(
    cache: &SupernetLayerCache,
    params: &LayerParams,
    menu: &LayerSpace,
    grad_out: &Matrix,
    mut grads: Option<&mut LayerParams>,
) -> Result<(Matrix, LayerScores)> {
    if cache.fingerprint != params.fingerprint() {
        return Err(Error::StaleCache);
    }
    if grad_out.shape() != cache.y.shape() {
        return Err(Error::shape(
            "supernet layer backward",
            format!("gradient {:?} vs output {:?}", grad_out.shape(), cache.y.shape()),
        ));
    }
    let mut scores: LayerScores = AxisSet::from_fn(|k| vec![0.0; menu.axis_len(k)]);
    let frames = grad_out.rows();

    let mut g_x = Matrix::zeros(frames, cache.x.cols());
    if cache.skip_w != 0.0 {
        g_x.axpy(cache.skip_w, grad_out)?;
    }
    if cache.with_scores {
        let gy = grad_out.inner(&cache.y);
        let gx = if menu.skip.contains(&true) {
            grad_out.inner(&cache.x)
        } else {
            0.0
        };
        for (s, &on) in scores.skip.iter_mut().zip(&menu.skip) {
            *s = gy + if on { gx } else { 0.0 };
        }
    }

    let mut g_z = grad_out.clone();
    for (g, &z) in g_z.data_mut().iter_mut().zip(cache.z.data()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    if let Some(gr) = grads.as_deref_mut() {
        for t in 0..frames {
            for (b, &g) in gr.bias.iter_mut().zip(g_z.row(t)) {
                *b += g;
            }
        }
    }
    if cache.with_scores {
        let mut base: f64 = (0..frames)
            .map(|t| crate::numcore::matrix::dot(g_z.row(t), &params.bias))
            .sum();
        let q_inner: Vec<f64> = cache
            .q
            .iter()
            .map(|q| q.as_ref().map_or(0.0, |q| q.inner(&g_z)))
            .collect();
        base += q_inner[0];
        for (s, &d) in scores.right.iter_mut().zip(&menu.right) {
            let k = params
                .right_offsets
                .binary_search(&(d as isize))
                .expect("offset union covers the menu");
            *s = base + if d > 0 { q_inner[k] } else { 0.0 };
        }
    }

    let mut g_u = Matrix::zeros(frames, params.bottleneck());
    for (k, &o) in params.right_offsets.iter().enumerate() {
        let w = cache.right_w[k];
        if w == 0.0 {
            continue;
        }
        if let Some(gr) = grads.as_deref_mut() {
            let su = cache.shifted_u[k].as_ref().expect("computed for non-zero taps");
            add_block(&mut gr.affine, k, &g_z.matmul_tn(su)?, w);
        }
        let g_shift = g_z.matmul(&params.affine_block(k))?;
        shift_rows_backward_into(&mut g_u, &g_shift, o, w);
    }

    if cache.with_scores {
        let mut col = vec![0.0; params.bottleneck()];
        for t in 0..frames {
            for ((c, &g), &b) in col.iter_mut().zip(g_u.row(t)).zip(cache.b.row(t)) {
                *c += g * b;
            }
        }
        for (s, &n) in scores.dim.iter_mut().zip(&menu.dims) {
            *s = col[..n].iter().sum();
        }
    }
    let mut g_b = g_u;
    for t in 0..frames {
        for (v, w) in g_b.row_mut(t).iter_mut().zip(&cache.col_w) {
            *v *= w;
        }
    }

    if cache.with_scores {
        let p_inner: Vec<f64> = cache
            .p
            .iter()
            .map(|p| p.as_ref().map_or(0.0, |p| p.inner(&g_b)))
            .collect();
        let zero = params.left_offsets.len() - 1;
        for (s, &c) in scores.left.iter_mut().zip(&menu.left) {
            let k = params
                .left_offsets
                .binary_search(&-(c as isize))
                .expect("offset union covers the menu");
            *s = p_inner[zero] + if c > 0 { p_inner[k] } else { 0.0 };
        }
    }
    for (k, &o) in params.left_offsets.iter().enumerate() {
        let w = cache.left_w[k];
        if w == 0.0 {
            continue;
        }
        if let Some(gr) = grads.as_deref_mut() {
            let sx = shift_rows(&cache.x, o);
            add_block(&mut gr.linear, k, &sx.matmul_tn(&g_b)?, w);
        }
        let g_shift = g_b.matmul_nt(&params.linear_block(k))?;
        shift_rows_backward_into(&mut g_x, &g_shift, o, w);
    }
    Ok((g_x, scores))
}

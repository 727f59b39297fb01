//! The factored TDNN layer.
//!
//! ```text
//! b = splice(x, left taps) · W̃                  (T × n, W̃ semi-orthogonal)
//! z = Σ_k splice(b, right tap k) · Ŵ_kᵀ + bias    (T × H)
//! y = ReLU(z)  [+ x when the layer carries a skip connection]
//! ```

use serde::{Deserialize, Serialize};

use super::splice::{shift_rows, shift_rows_backward_into, splice, splice_backward};
use crate::error::{Error, Result};
use crate::numcore::orth::{random_semi_orthogonal, semi_orthogonal_step_any};
use crate::numcore::{Matrix, Rng};

/// Left context `{-left, 0}` and right context `{0, right}` of one layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextSpec {
    pub left: usize,
    pub right: usize,
}

impl ContextSpec {
    pub fn new(left: usize, right: usize) -> Self {
        ContextSpec { left, right }
    }

    pub fn left_offsets(&self) -> Vec<isize> {
        if self.left == 0 {
            vec![0]
        } else {
            vec![-(self.left as isize), 0]
        }
    }

    pub fn right_offsets(&self) -> Vec<isize> {
        if self.right == 0 {
            vec![0]
        } else {
            vec![0, self.right as isize]
        }
    }
}

/// Parameters of one factored layer. `linear` stacks one `input_dim × n`
/// block per left offset; `affine` stacks one `output_dim × n` block per
/// right offset. Offsets are sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub left_offsets: Vec<isize>,
    pub right_offsets: Vec<isize>,
    pub linear: Matrix,
    pub affine: Matrix,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(
        left_offsets: Vec<isize>,
        right_offsets: Vec<isize>,
        input_dim: usize,
        output_dim: usize,
        bottleneck: usize,
    ) -> Self {
        let linear = Matrix::zeros(left_offsets.len() * input_dim, bottleneck);
        let affine = Matrix::zeros(right_offsets.len() * output_dim, bottleneck);
        LayerParams {
            left_offsets,
            right_offsets,
            linear,
            affine,
            bias: vec![0.0; output_dim],
        }
    }

    /// Semi-orthogonal `linear`, He-scaled `affine`, zero bias.
    pub fn init(
        left_offsets: Vec<isize>,
        right_offsets: Vec<isize>,
        input_dim: usize,
        output_dim: usize,
        bottleneck: usize,
        rng: &mut Rng,
    ) -> Self {
        let linear = random_semi_orthogonal(left_offsets.len() * input_dim, bottleneck, rng);
        let std = (2.0 / (right_offsets.len() * bottleneck) as f64).sqrt();
        let affine = Matrix::from_fn(right_offsets.len() * output_dim, bottleneck, |_, _| {
            std * rng.normal()
        });
        LayerParams {
            left_offsets,
            right_offsets,
            linear,
            affine,
            bias: vec![0.0; output_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.linear.rows() / self.left_offsets.len()
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn bottleneck(&self) -> usize {
        self.linear.cols()
    }

    /// `W̃` block for the `k`-th left offset.
    pub fn linear_block(&self, k: usize) -> Matrix {
        let d = self.input_dim();
        self.linear.row_block(k * d, d)
    }

    /// `Ŵ` block for the `k`-th right offset.
    pub fn affine_block(&self, k: usize) -> Matrix {
        let h = self.output_dim();
        self.affine.row_block(k * h, h)
    }

    pub fn param_count(&self) -> usize {
        self.linear.data().len() + self.affine.data().len() + self.bias.len()
    }

    pub fn zeros_like(&self) -> Self {
        LayerParams::zeros(
            self.left_offsets.clone(),
            self.right_offsets.clone(),
            self.input_dim(),
            self.output_dim(),
            self.bottleneck(),
        )
    }

    /// FNV-1a over the bit patterns of every weight; ties a cache to the
    /// exact parameter values it was computed with.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for o in self.left_offsets.iter().chain(&self.right_offsets) {
            feed(*o as u64);
        }
        for v in self
            .linear
            .data()
            .iter()
            .chain(self.affine.data())
            .chain(&self.bias)
        {
            feed(v.to_bits());
        }
        h
    }

    pub fn tensors(&self) -> [&[f64]; 3] {
        [self.linear.data(), self.affine.data(), &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 3] {
        [self.linear.data_mut(), self.affine.data_mut(), &mut self.bias]
    }

    /// One semi-orthogonal projection step on `linear`.
    pub fn constrain(&mut self, nu: f64) -> Result<()> {
        self.linear = semi_orthogonal_step_any(&self.linear, nu)?;
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if self.left_offsets.is_empty() || self.right_offsets.is_empty() {
            return Err(Error::shape("factored layer", "empty tap list"));
        }
        if self.linear.rows() % self.left_offsets.len() != 0
            || self.affine.rows() != self.right_offsets.len() * self.output_dim()
            || self.affine.cols() != self.linear.cols()
        {
            return Err(Error::shape(
                "factored layer",
                format!(
                    "inconsistent parameters: linear {:?}, affine {:?}, bias {}",
                    self.linear.shape(),
                    self.affine.shape(),
                    self.bias.len()
                ),
            ));
        }
        if x.cols() != self.input_dim() {
            return Err(Error::shape(
                "factored layer",
                format!("input has {} features, layer expects {}", x.cols(), self.input_dim()),
            ));
        }
        if x.rows() == 0 {
            return Err(Error::shape("factored layer", "empty sequence"));
        }
        Ok(())
    }
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct LayerCache {
    fingerprint: u64,
    skip: bool,
    spliced_input: Matrix,
    shifted_bottleneck: Vec<Matrix>,
    pre_activation: Matrix,
}

impl LayerCache {
    pub fn pre_activation(&self) -> &Matrix {
        &self.pre_activation
    }
}

pub fn factored_layer_forward(
    x: &Matrix,
    params: &LayerParams,
    skip: bool,
) -> Result<(Matrix, LayerCache)> {
    params.check_input(x)?;
    if skip && params.input_dim() != params.output_dim() {
        return Err(Error::shape(
            "factored layer",
            format!(
                "skip connection needs equal widths, got {} -> {}",
                params.input_dim(),
                params.output_dim()
            ),
        ));
    }
    let spliced_input = splice(x, &params.left_offsets)?;
    let bottleneck = spliced_input.matmul(&params.linear)?;

    let frames = x.rows();
    let mut z = Matrix::zeros(frames, params.output_dim());
    for t in 0..frames {
        z.row_mut(t).copy_from_slice(&params.bias);
    }
    let mut shifted_bottleneck = Vec::with_capacity(params.right_offsets.len());
    for (k, &o) in params.right_offsets.iter().enumerate() {
        let shifted = shift_rows(&bottleneck, o);
        z.add_matmul_nt(1.0, &shifted, &params.affine_block(k))?;
        shifted_bottleneck.push(shifted);
    }

    let mut y = z.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    if skip {
        y.axpy(1.0, x)?;
    }
    let cache = LayerCache {
        fingerprint: params.fingerprint(),
        skip,
        spliced_input,
        shifted_bottleneck,
        pre_activation: z,
    };
    Ok((y, cache))
}

/// Returns the gradient with respect to the layer input and the parameter
/// gradients (same layout as `params`).
pub fn factored_layer_backward(
    cache: &LayerCache,
    params: &LayerParams,
    grad_out: &Matrix,
) -> Result<(Matrix, LayerParams)> {
    if cache.fingerprint != params.fingerprint() {
        return Err(Error::StaleCache);
    }
    if grad_out.shape() != cache.pre_activation.shape() {
        return Err(Error::shape(
            "factored layer backward",
            format!(
                "gradient {:?} vs output {:?}",
                grad_out.shape(),
                cache.pre_activation.shape()
            ),
        ));
    }
    let mut grads = params.zeros_like();

    let mut gz = grad_out.clone();
    for (g, &z) in gz.data_mut().iter_mut().zip(cache.pre_activation.data()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    for t in 0..gz.rows() {
        for (b, &g) in grads.bias.iter_mut().zip(gz.row(t)) {
            *b += g;
        }
    }

    let frames = gz.rows();
    let h = params.output_dim();
    let mut g_bottleneck = Matrix::zeros(frames, params.bottleneck());
    for (k, &o) in params.right_offsets.iter().enumerate() {
        let block = params.affine_block(k);
        let g_block = gz.matmul_tn(&cache.shifted_bottleneck[k])?;
        grads.affine.data_mut()[k * h * block.cols()..(k + 1) * h * block.cols()]
            .copy_from_slice(g_block.data());
        let g_shifted = gz.matmul(&block)?;
        shift_rows_backward_into(&mut g_bottleneck, &g_shifted, o, 1.0);
    }

    grads.linear = cache.spliced_input.matmul_tn(&g_bottleneck)?;
    let g_spliced = g_bottleneck.matmul_nt(&params.linear)?;
    let mut g_in = splice_backward(&g_spliced, &params.left_offsets)?;
    if cache.skip {
        g_in.axpy(1.0, grad_out)?;
    }
    Ok((g_in, grads))
}

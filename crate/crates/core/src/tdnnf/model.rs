//! Whole candidate models: a stack of factored layers followed by one
//! affine classifier.

use serde::{Deserialize, Serialize};

use super::layer::{
    factored_layer_backward, factored_layer_forward, ContextSpec, LayerCache, LayerParams,
};
use super::loss::{masked_loss, LossKind};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng};

/// Widths shared by every candidate of a search space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    /// Bottleneck width used when a layer does not state its own.
    pub bottleneck: usize,
}

impl Geometry {
    pub fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden_dim
        }
    }
}

/// Architecture of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerChoice {
    pub left: usize,
    pub right: usize,
    pub dim: usize,
    pub skip: bool,
}

impl LayerChoice {
    pub fn context(&self) -> ContextSpec {
        ContextSpec::new(self.left, self.right)
    }
}

/// One concrete architecture.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub geometry: Geometry,
    pub layers: Vec<LayerChoice>,
}

impl CandidateSpec {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if self.layers.is_empty() {
            return Err(Error::InvalidCandidate("no layers".into()));
        }
        if g.input_dim == 0 || g.hidden_dim == 0 || g.classes < 2 {
            return Err(Error::InvalidCandidate(format!(
                "degenerate geometry: input {}, hidden {}, classes {}",
                g.input_dim, g.hidden_dim, g.classes
            )));
        }
        for (l, c) in self.layers.iter().enumerate() {
            if c.dim == 0 {
                return Err(Error::InvalidCandidate(format!("layer {l}: bottleneck 0")));
            }
            if c.skip && g.layer_input_dim(l) != g.hidden_dim {
                return Err(Error::InvalidCandidate(format!(
                    "layer {l}: skip needs equal widths, got {} -> {}",
                    g.layer_input_dim(l),
                    g.hidden_dim
                )));
            }
        }
        Ok(())
    }

    /// Weights of layer `l`: both factors and the bias.
    pub fn layer_param_count(&self, l: usize) -> usize {
        let c = &self.layers[l];
        let ctx = c.context();
        let h = self.geometry.hidden_dim;
        ctx.left_offsets().len() * self.geometry.layer_input_dim(l) * c.dim
            + ctx.right_offsets().len() * c.dim * h
            + h
    }

    pub fn classifier_param_count(&self) -> usize {
        let g = &self.geometry;
        g.classes * g.hidden_dim + g.classes
    }

    pub fn param_count(&self) -> usize {
        (0..self.layers.len())
            .map(|l| self.layer_param_count(l))
            .sum::<usize>()
            + self.classifier_param_count()
    }

    /// Largest frame distance at which an input can influence an output.
    pub fn receptive_field(&self) -> usize {
        self.layers.iter().map(|c| c.left + c.right).sum()
    }
}

/// One labelled sequence. Frames with `mask[t] == false` are excluded from
/// loss and metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub frames: Matrix,
    pub labels: Vec<u32>,
    pub mask: Vec<bool>,
}

impl Sequence {
    pub fn new(frames: Matrix, labels: Vec<u32>, mask: Vec<bool>) -> Result<Self> {
        if labels.len() != frames.rows() || mask.len() != frames.rows() {
            return Err(Error::shape(
                "sequence",
                format!(
                    "{} frames, {} labels, {} mask entries",
                    frames.rows(),
                    labels.len(),
                    mask.len()
                ),
            ));
        }
        Ok(Sequence {
            frames,
            labels,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn supervised_frames(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<LayerParams>,
    /// `classes × hidden_dim`.
    pub classifier: Matrix,
    pub classifier_bias: Vec<f64>,
}

impl ModelParams {
    /// Fresh random initialization for `spec`. Output logits start small so
    /// the initial cross-entropy sits near `ln(classes)`.
    pub fn init(spec: &CandidateSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let g = &spec.geometry;
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(l, c)| {
                let ctx = c.context();
                LayerParams::init(
                    ctx.left_offsets(),
                    ctx.right_offsets(),
                    g.layer_input_dim(l),
                    g.hidden_dim,
                    c.dim,
                    rng,
                )
            })
            .collect();
        Ok(ModelParams {
            layers,
            classifier: Self::init_classifier(g, rng),
            classifier_bias: vec![0.0; g.classes],
        })
    }

    pub(crate) fn init_classifier(g: &Geometry, rng: &mut Rng) -> Matrix {
        let std = 0.25 / (g.hidden_dim as f64).sqrt();
        Matrix::from_fn(g.classes, g.hidden_dim, |_, _| std * rng.normal())
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            layers: self.layers.iter().map(LayerParams::zeros_like).collect(),
            classifier: Matrix::zeros(self.classifier.rows(), self.classifier.cols()),
            classifier_bias: vec![0.0; self.classifier_bias.len()],
        }
    }

    /// Every tensor in a fixed order: per layer linear, affine, bias; then
    /// classifier weight and bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.layers.iter().flat_map(|l| l.tensors()).collect();
        out.push(self.classifier.data());
        out.push(&self.classifier_bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| l.tensors_mut())
            .collect();
        out.push(self.classifier.data_mut());
        out.push(&mut self.classifier_bias);
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, alpha: f64) -> Result<()> {
        let src = other.tensors();
        let mut dst = self.tensors_mut();
        if src.len() != dst.len() || src.iter().zip(&dst).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::shape("add_scaled", "parameter layouts differ"));
        }
        for (d, s) in dst.iter_mut().zip(src) {
            for (a, &b) in d.iter_mut().zip(s) {
                *a += alpha * b;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// One semi-orthogonal projection step on every linear factor.
    pub fn constrain(&mut self, nu: f64) -> Result<()> {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer.constrain(nu).map_err(|e| e.in_layer(l))?;
        }
        Ok(())
    }

    fn check_against(&self, spec: &CandidateSpec) -> Result<()> {
        if self.layers.len() != spec.layers.len() {
            return Err(Error::shape(
                "model",
                format!(
                    "spec has {} layers, parameters have {}",
                    spec.layers.len(),
                    self.layers.len()
                ),
            ));
        }
        for (l, (p, c)) in self.layers.iter().zip(&spec.layers).enumerate() {
            let ctx = c.context();
            if p.left_offsets != ctx.left_offsets()
                || p.right_offsets != ctx.right_offsets()
                || p.bottleneck() != c.dim
            {
                return Err(Error::shape("model", "parameters do not match the spec")
                    .in_layer(l));
            }
        }
        let g = &spec.geometry;
        if self.classifier.shape() != (g.classes, g.hidden_dim)
            || self.classifier_bias.len() != g.classes
        {
            return Err(Error::shape(
                "model",
                format!(
                    "classifier {:?} for {} classes, hidden {}",
                    self.classifier.shape(),
                    g.classes,
                    g.hidden_dim
                ),
            ));
        }
        Ok(())
    }
}

/// Output of the layer stack on one sequence.
#[derive(Clone, Debug)]
pub struct ModelOutput {
    pub hidden: Matrix,
    pub logits: Matrix,
    caches: Vec<LayerCache>,
}

pub fn model_forward(spec: &CandidateSpec, params: &ModelParams, x: &Matrix) -> Result<ModelOutput> {
    params.check_against(spec)?;
    let mut caches = Vec::with_capacity(params.layers.len());
    let mut h = x.clone();
    for (l, (p, c)) in params.layers.iter().zip(&spec.layers).enumerate() {
        let (y, cache) = factored_layer_forward(&h, p, c.skip).map_err(|e| e.in_layer(l))?;
        caches.push(cache);
        h = y;
    }
    let logits = classifier_forward(&h, &params.classifier, &params.classifier_bias)?;
    Ok(ModelOutput {
        hidden: h,
        logits,
        caches,
    })
}

pub(crate) fn classifier_forward(h: &Matrix, weight: &Matrix, bias: &[f64]) -> Result<Matrix> {
    let mut logits = h.matmul_nt(weight)?;
    for t in 0..logits.rows() {
        for (v, b) in logits.row_mut(t).iter_mut().zip(bias) {
            *v += b;
        }
    }
    Ok(logits)
}

/// Forward pass with the loss already evaluated.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub output: ModelOutput,
    pub loss: f64,
    grad_logits: Matrix,
}

pub fn model_forward_loss(
    spec: &CandidateSpec,
    params: &ModelParams,
    seq: &Sequence,
    kind: LossKind,
) -> Result<ForwardPass> {
    let output = model_forward(spec, params, &seq.frames)?;
    let (loss, grad_logits) = masked_loss(&output.logits, &seq.labels, &seq.mask, kind)?;
    Ok(ForwardPass {
        output,
        loss,
        grad_logits,
    })
}

/// Accumulates `scale * ∂loss/∂params` into `grads`.
pub fn model_backward(
    pass: &ForwardPass,
    params: &ModelParams,
    scale: f64,
    grads: &mut ModelParams,
) -> Result<()> {
    let mut g_logits = pass.grad_logits.clone();
    g_logits.scale(scale);
    grads
        .classifier
        .add_matmul_tn(1.0, &g_logits, &pass.output.hidden)?;
    for t in 0..g_logits.rows() {
        for (b, &g) in grads.classifier_bias.iter_mut().zip(g_logits.row(t)) {
            *b += g;
        }
    }
    let mut g_h = g_logits.matmul(&params.classifier)?;
    for l in (0..params.layers.len()).rev() {
        let (g_in, g_layer) =
            factored_layer_backward(&pass.output.caches[l], &params.layers[l], &g_h)
                .map_err(|e| e.in_layer(l))?;
        let dst = &mut grads.layers[l];
        for (d, s) in dst.tensors_mut().into_iter().zip(g_layer.tensors()) {
            for (a, &b) in d.iter_mut().zip(s) {
                *a += b;
            }
        }
        g_h = g_in;
    }
    Ok(())
}

/// Loss and gradient on one sequence.
pub fn model_loss_and_grad(
    spec: &CandidateSpec,
    params: &ModelParams,
    seq: &Sequence,
    kind: LossKind,
) -> Result<(f64, ModelParams)> {
    let pass = model_forward_loss(spec, params, seq, kind)?;
    let mut grads = params.zeros_like();
    model_backward(&pass, params, 1.0, &mut grads)?;
    Ok((pass.loss, grads))
}

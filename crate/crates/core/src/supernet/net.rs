//! Whole supernets: shared parameters for every candidate of a space.

use super::arch::{LayerMix, LayerScores};
use super::layer::{supernet_layer_backward, supernet_layer_forward, SupernetLayerCache};
use super::space::SearchSpace;
use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng};
use crate::tdnnf::model::classifier_forward;
use crate::tdnnf::{masked_loss, CandidateSpec, LayerParams, LossKind, ModelParams, Sequence};

/// A search space together with its shared parameters. Layer `l` holds one
/// linear block per offset in the layer's left union and one affine block
/// per offset in its right union, all at the widest bottleneck.
#[derive(Clone, Debug, PartialEq)]
pub struct Supernet {
    pub space: SearchSpace,
    pub params: ModelParams,
}

impl Supernet {
    pub fn init(space: SearchSpace, rng: &mut Rng) -> Result<Self> {
        space.validate()?;
        let g = space.geometry;
        let layers = space
            .layers
            .iter()
            .enumerate()
            .map(|(l, ls)| {
                LayerParams::init(
                    ls.left_union(),
                    ls.right_union(),
                    g.layer_input_dim(l),
                    g.hidden_dim,
                    ls.max_dim(),
                    rng,
                )
            })
            .collect();
        let params = ModelParams {
            layers,
            classifier: ModelParams::init_classifier(&g, rng),
            classifier_bias: vec![0.0; g.classes],
        };
        Ok(Supernet { space, params })
    }

    /// Standalone parameters of `spec`, copied out of the shared tensors:
    /// the tap blocks it connects, restricted to its leading `n` columns.
    pub fn extract(&self, spec: &CandidateSpec) -> Result<ModelParams> {
        if !self.space.contains(spec) {
            return Err(Error::InvalidCandidate("candidate not in the search space".into()));
        }
        let layers = self
            .params
            .layers
            .iter()
            .zip(&spec.layers)
            .map(|(p, c)| {
                let ctx = c.context();
                let pick = |offsets: &[isize], wanted: Vec<isize>, block: &dyn Fn(usize) -> Matrix| {
                    let blocks: Vec<Matrix> = wanted
                        .iter()
                        .map(|o| {
                            let k = offsets.binary_search(o).expect("offset union covers the menu");
                            block(k).leading_columns(c.dim)
                        })
                        .collect();
                    Matrix::vstack(&blocks)
                };
                Ok(LayerParams {
                    left_offsets: ctx.left_offsets(),
                    right_offsets: ctx.right_offsets(),
                    linear: pick(&p.left_offsets, ctx.left_offsets(), &|k| p.linear_block(k))?,
                    affine: pick(&p.right_offsets, ctx.right_offsets(), &|k| p.affine_block(k))?,
                    bias: p.bias.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelParams {
            layers,
            classifier: self.params.classifier.clone(),
            classifier_bias: self.params.classifier_bias.clone(),
        })
    }
}

/// Forward pass through the supernet with the loss evaluated.
#[derive(Clone, Debug)]
pub struct SupernetPass {
    pub hidden: Matrix,
    pub logits: Matrix,
    pub loss: f64,
    caches: Vec<SupernetLayerCache>,
    grad_logits: Matrix,
}

pub fn supernet_forward(
    net: &Supernet,
    mixes: &[LayerMix],
    x: &Matrix,
    with_scores: bool,
) -> Result<(Matrix, Matrix, Vec<SupernetLayerCache>)> {
    if mixes.len() != net.space.layers.len() {
        return Err(Error::shape(
            "supernet",
            format!("{} mixtures for {} layers", mixes.len(), net.space.layers.len()),
        ));
    }
    let mut h = x.clone();
    let mut caches = Vec::with_capacity(mixes.len());
    for (l, ((p, ls), mix)) in net
        .params
        .layers
        .iter()
        .zip(&net.space.layers)
        .zip(mixes)
        .enumerate()
    {
        let (y, cache) =
            supernet_layer_forward(&h, p, ls, mix, with_scores).map_err(|e| e.in_layer(l))?;
        caches.push(cache);
        h = y;
    }
    let logits = classifier_forward(&h, &net.params.classifier, &net.params.classifier_bias)?;
    Ok((h, logits, caches))
}

pub fn supernet_forward_loss(
    net: &Supernet,
    mixes: &[LayerMix],
    seq: &Sequence,
    kind: LossKind,
    with_scores: bool,
) -> Result<SupernetPass> {
    let (hidden, logits, caches) = supernet_forward(net, mixes, &seq.frames, with_scores)?;
    let (loss, grad_logits) = masked_loss(&logits, &seq.labels, &seq.mask, kind)?;
    Ok(SupernetPass {
        hidden,
        logits,
        loss,
        caches,
        grad_logits,
    })
}

/// Backward pass for `scale · loss`. Parameter gradients are accumulated
/// into `grads` when given; the returned scores are `scale · ∂loss/∂λ`.
pub fn supernet_backward(
    net: &Supernet,
    pass: &SupernetPass,
    scale: f64,
    mut grads: Option<&mut ModelParams>,
) -> Result<Vec<LayerScores>> {
    let mut g_logits = pass.grad_logits.clone();
    g_logits.scale(scale);
    if let Some(gr) = grads.as_deref_mut() {
        gr.classifier.add_matmul_tn(1.0, &g_logits, &pass.hidden)?;
        for t in 0..g_logits.rows() {
            for (b, &g) in gr.classifier_bias.iter_mut().zip(g_logits.row(t)) {
                *b += g;
            }
        }
    }
    let mut g_h = g_logits.matmul(&net.params.classifier)?;
    let mut scores = Vec::with_capacity(pass.caches.len());
    for l in (0..pass.caches.len()).rev() {
        let layer_grads = grads.as_deref_mut().map(|g| &mut g.layers[l]);
        let (g_in, s) = supernet_layer_backward(
            &pass.caches[l],
            &net.params.layers[l],
            &net.space.layers[l],
            &g_h,
            layer_grads,
        )
        .map_err(|e| e.in_layer(l))?;
        scores.push(s);
        g_h = g_in;
    }
    scores.reverse();
    Ok(scores)
}

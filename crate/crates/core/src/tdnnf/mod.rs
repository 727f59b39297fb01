//! Factored TDNN building blocks and whole candidate models.

pub mod layer;
pub mod loss;
pub mod model;
pub mod splice;

pub use layer::{factored_layer_backward, factored_layer_forward, ContextSpec, LayerCache, LayerParams};
pub use loss::{correct_frames, masked_loss, LossKind};
pub use model::{
    model_backward, model_forward, model_forward_loss, model_loss_and_grad, CandidateSpec,
    ForwardPass, Geometry, LayerChoice, ModelOutput, ModelParams, Sequence,
};
pub use splice::{splice, splice_backward};

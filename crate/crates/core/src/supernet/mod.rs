//! Weight-sharing supernets over factored TDNN layers.

pub mod arch;
pub mod layer;
pub mod mixture;
pub mod net;
pub mod penalty;
pub mod space;

pub use arch::{accumulate_logit_grads, one_hot_mix, ArchWeights, LayerMix, LayerScores};
pub use layer::{supernet_layer_backward, supernet_layer_forward, SupernetLayerCache};
pub use mixture::{
    arch_grad_gumbel, arch_grad_softmax, check_simplex, mixture_forward, softmax_logit_grad,
    MixtureCache,
};
pub use net::{supernet_backward, supernet_forward, supernet_forward_loss, Supernet, SupernetPass};
pub use penalty::{penalized_loss, penalty};
pub use space::{candidate_param_count, AxisKind, AxisSet, LayerSpace, SearchSpace};

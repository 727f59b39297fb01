//! Discretizing architecture weights into one candidate.

use crate::supernet::{ArchWeights, AxisSet, SearchSpace};
use crate::error::{Error, Result};
use crate::numcore::softmax;
use crate::tdnnf::CandidateSpec;

/// Index of the largest weight. Exact ties go to the smaller cost, then to
/// the lower index.
pub fn select_candidate(lambda: &[f64], costs: &[f64]) -> usize {
    assert_eq!(lambda.len(), costs.len(), "one cost per candidate");
    let mut best = 0;
    for i in 1..lambda.len() {
        let (a, b) = (lambda[i], lambda[best]);
        if a > b || (a == b && costs[i] < costs[best]) {
            best = i;
        }
    }
    best
}

/// Per layer and axis, keeps the candidate with the largest softmax weight.
pub fn derive_architecture(arch: &ArchWeights, space: &SearchSpace) -> Result<CandidateSpec> {
    arch.check(space)?;
    let mut layers = Vec::with_capacity(space.layers.len());
    for (l, (a, ls)) in arch.layers.iter().zip(&space.layers).enumerate() {
        let costs = space.costs(l);
        let mut idx = AxisSet::<usize>::default();
        for (k, log_alpha) in a.iter() {
            let lambda = softmax(log_alpha).map_err(|e| e.in_layer(l))?;
            if lambda.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { what: "lambda".into() }.in_layer(l));
            }
            *idx.get_mut(k) = select_candidate(&lambda, costs.get(k));
        }
        layers.push(ls.choice(&idx));
    }
    Ok(CandidateSpec {
        geometry: space.geometry,
        layers,
    })
}

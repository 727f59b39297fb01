use crate::error::{Error, Result};

/// SGD with heavy-ball momentum: `v <- m*v - lr*g; p <- p + v`.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimState {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl OptimState {
    pub fn new(lr: f64, momentum: f64) -> Self {
        OptimState {
            lr,
            momentum,
            velocity: Vec::new(),
        }
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }
}

/// Applies one momentum step to every tensor. Velocity buffers are
/// created on the first call and must keep their shapes afterwards.
pub fn sgd_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut OptimState) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::shape(
            "sgd_step",
            format!("{} parameter tensors, {} gradients", params.len(), grads.len()),
        ));
    }
    if state.velocity.is_empty() {
        state.velocity = params.iter().map(|p| vec![0.0; p.len()]).collect();
    }
    if state.velocity.len() != params.len() {
        return Err(Error::shape(
            "sgd_step",
            format!("{} velocity buffers for {} tensors", state.velocity.len(), params.len()),
        ));
    }
    for (i, ((p, g), v)) in params.iter().zip(grads).zip(&state.velocity).enumerate() {
        if p.len() != g.len() || p.len() != v.len() {
            return Err(Error::shape(
                "sgd_step",
                format!("tensor {i}: param {}, grad {}, velocity {}", p.len(), g.len(), v.len()),
            ));
        }
    }
    let (lr, m) = (state.lr, state.momentum);
    for ((p, g), v) in params.iter_mut().zip(grads).zip(state.velocity.iter_mut()) {
        for ((pi, &gi), vi) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
            *vi = m * *vi - lr * gi;
            *pi += *vi;
        }
    }
    Ok(())
}

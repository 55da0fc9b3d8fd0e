//! Layers with analytic forward and backward passes.
//!
//! Forward passes that feed training return an explicit cache value; the
//! matching `backward` consumes that cache together with the upstream
//! gradient and returns parameter gradients (laid out as a layer of the same
//! type) plus the gradient with respect to the layer input.

mod conv;
mod dense;
mod gradcheck;
mod lstm;
mod srelu;

pub use conv::{Conv1dLayer, ConvCache};
pub use dense::DenseLayer;
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{LstmCell, LstmSequenceGrads, SequenceCache, StepCache};
pub use srelu::SReluParams;

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::tensor::Tensor;

/// Glorot/Xavier uniform draw: `U(-limit, limit)` with `limit = sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_uniform<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot bounds");
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = dist.sample(rng);
    }
    t
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

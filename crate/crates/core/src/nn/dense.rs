use rand::Rng;

use super::glorot_uniform;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::tensor::Tensor;

/// Affine map `W x + b` with no activation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[out x in]`
    pub weights: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> Self {
        Self {
            weights: glorot_uniform(rng, &[outputs, inputs], inputs, outputs),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut y = self.weights.matvec(x.data())?;
        for (v, b) in y.iter_mut().zip(self.bias.data()) {
            *v += b;
        }
        Ok(Tensor::vector(y))
    }

    /// The forward input is the whole cache for an affine layer.
    pub fn backward(&self, input: &Tensor, upstream: &Tensor) -> Result<(DenseLayer, Tensor)> {
        if input.len() != self.inputs() || upstream.len() != self.outputs() {
            return Err(Error::State(format!(
                "dense layer {:?} got cached input of {} and upstream of {}",
                self.weights.shape(),
                input.len(),
                upstream.len()
            )));
        }
        let mut dw = Tensor::zeros(self.weights.shape());
        dw.add_outer(upstream.data(), input.data())?;
        let dx = self.weights.matvec_t(upstream.data())?;
        Ok((
            DenseLayer {
                weights: dw,
                bias: Tensor::vector(upstream.data().to_vec()),
            },
            Tensor::vector(dx),
        ))
    }
}

impl Params for DenseLayer {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("weights".into(), &self.weights),
            ("bias".into(), &self.bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("weights".into(), &mut self.weights),
            ("bias".into(), &mut self.bias),
        ]
    }
}

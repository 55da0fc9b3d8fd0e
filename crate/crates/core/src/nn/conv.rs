use rand::Rng;

use super::{glorot_uniform, SReluParams};
use crate::error::{Error, Result};
use crate::params::{prefixed, Params};
use crate::tensor::Tensor;

/// Valid (unpadded) 1D convolution followed by a per-filter SReLU.
///
/// Kernels are applied as cross-correlation: no flip.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dLayer {
    /// `[filters x in_channels x filter_len]`
    pub kernels: Tensor,
    /// `[filters]`
    pub bias: Tensor,
    pub activation: SReluParams,
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    pub input: Tensor,
    pub pre_activation: Tensor,
}

impl Conv1dLayer {
    pub fn new<R: Rng + ?Sized>(
        rng: &mut R,
        filters: usize,
        in_channels: usize,
        filter_len: usize,
    ) -> Self {
        Self {
            kernels: glorot_uniform(
                rng,
                &[filters, in_channels, filter_len],
                in_channels * filter_len,
                filters * filter_len,
            ),
            bias: Tensor::zeros(&[filters]),
            activation: SReluParams::new(filters),
        }
    }

    pub fn filters(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn filter_len(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn output_len(&self, input_len: usize) -> Option<usize> {
        (input_len + 1).checked_sub(self.filter_len()).filter(|&l| l > 0)
    }

    /// `input: [in_channels x len]` -> `[filters x (len - filter_len + 1)]`.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, ConvCache)> {
        let pre = self.pre_activation(input)?;
        let out = self.activation.forward(&pre)?;
        Ok((
            out,
            ConvCache {
                input: input.clone(),
                pre_activation: pre,
            },
        ))
    }

    fn pre_activation(&self, input: &Tensor) -> Result<Tensor> {
        let (f, c, k) = (self.filters(), self.in_channels(), self.filter_len());
        if input.shape().len() != 2 || input.rows() != c {
            return Err(Error::dim("conv1d_forward", input.shape(), self.kernels.shape()));
        }
        let len = input.cols();
        let out_len = self
            .output_len(len)
            .ok_or_else(|| Error::dim("conv1d_forward", input.shape(), self.kernels.shape()))?;
        let w = self.kernels.data();
        let x = input.data();
        let mut out = Tensor::zeros(&[f, out_len]);
        let o = out.data_mut();
        for fi in 0..f {
            let b = self.bias.data()[fi];
            for j in 0..out_len {
                let mut acc = 0.0;
                for ci in 0..c {
                    let wrow = &w[(fi * c + ci) * k..(fi * c + ci + 1) * k];
                    let xrow = &x[ci * len + j..ci * len + j + k];
                    for (wv, xv) in wrow.iter().zip(xrow) {
                        acc += wv * xv;
                    }
                }
                o[fi * out_len + j] = acc + b;
            }
        }
        Ok(out)
    }

    /// Returns `(parameter grads, input grad)`.
    pub fn backward(&self, cache: &ConvCache, upstream: &Tensor) -> Result<(Conv1dLayer, Tensor)> {
        if upstream.shape() != cache.pre_activation.shape() {
            return Err(Error::State(format!(
                "conv cache holds output {:?}, upstream gradient is {:?}",
                cache.pre_activation.shape(),
                upstream.shape()
            )));
        }
        let (act_grads, d_pre) = self.activation.backward(&cache.pre_activation, upstream)?;
        let (f, c, k) = (self.filters(), self.in_channels(), self.filter_len());
        let len = cache.input.cols();
        let out_len = d_pre.cols();
        let x = cache.input.data();
        let w = self.kernels.data();
        let g = d_pre.data();

        let mut dk = Tensor::zeros(self.kernels.shape());
        let mut db = Tensor::zeros(&[f]);
        let mut dx = Tensor::zeros(cache.input.shape());
        {
            let dkd = dk.data_mut();
            let dxd = dx.data_mut();
            for fi in 0..f {
                let grow = &g[fi * out_len..(fi + 1) * out_len];
                db.data_mut()[fi] = grow.iter().sum();
                for ci in 0..c {
                    for u in 0..k {
                        let widx = (fi * c + ci) * k + u;
                        let mut acc = 0.0;
                        for (j, gv) in grow.iter().enumerate() {
                            acc += gv * x[ci * len + j + u];
                            dxd[ci * len + j + u] += w[widx] * gv;
                        }
                        dkd[widx] = acc;
                    }
                }
            }
        }
        Ok((
            Conv1dLayer {
                kernels: dk,
                bias: db,
                activation: act_grads,
            },
            dx,
        ))
    }
}

impl Params for Conv1dLayer {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = vec![
            ("kernels".to_string(), &self.kernels),
            ("bias".to_string(), &self.bias),
        ];
        v.extend(prefixed("srelu", self.activation.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut v = vec![
            ("kernels".to_string(), &mut self.kernels),
            ("bias".to_string(), &mut self.bias),
        ];
        v.extend(prefixed("srelu", self.activation.params_mut()));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::nn::test_util::{project, random, rng};
    use crate::params::ParamSet;
    use rand::Rng;

    fn identity_activation(filters: usize) -> SReluParams {
        SReluParams::uniform(filters, -1.0, 1.0, 1.0, 1.0)
    }

    fn with_kernel(kernel: &[f64]) -> Conv1dLayer {
        Conv1dLayer {
            kernels: Tensor::new(vec![1, 1, kernel.len()], kernel.to_vec()).unwrap(),
            bias: Tensor::zeros(&[1]),
            activation: identity_activation(1),
        }
    }

    #[test]
    fn difference_kernel() {
        let layer = with_kernel(&[1.0, 0.0, -1.0]);
        let x = Tensor::matrix(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), &[-2.0, -2.0]);
    }

    #[test]
    fn unit_kernel_is_identity() {
        let layer = with_kernel(&[1.0]);
        let x = Tensor::matrix(1, 5, vec![0.3, -1.5, 2.0, 4.0, -0.1]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), x.data());
    }

    #[test]
    fn short_input_is_dimension_error() {
        let layer = with_kernel(&[1.0, 1.0, 1.0]);
        let x = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(layer.forward(&x), Err(Error::Dimension { .. })));
    }

    #[test]
    fn full_size_stack_feature_count() {
        let mut r = rng(0);
        let mut len = 33;
        let mut channels = 15;
        for k in [3, 3, 2] {
            let layer = Conv1dLayer::new(&mut r, 30, channels, k);
            len = layer.output_len(len).unwrap();
            channels = 30;
        }
        assert_eq!(len, 28);
        assert_eq!(len * channels, 840);
    }

    fn conv_from(set: &ParamSet) -> Conv1dLayer {
        Conv1dLayer {
            kernels: set.get("kernels").unwrap().clone(),
            bias: set.get("bias").unwrap().clone(),
            activation: SReluParams {
                t_left: set.get("srelu.t_left").unwrap().clone(),
                a_left: set.get("srelu.a_left").unwrap().clone(),
                t_right: set.get("srelu.t_right").unwrap().clone(),
                a_right: set.get("srelu.a_right").unwrap().clone(),
            },
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..20 {
            let mut r = rng(100 + seed);
            let (f, c, k, len) = (2, 3, r.random_range(1..=3), 6);
            let mut layer = Conv1dLayer::new(&mut r, f, c, k);
            layer.bias = random(&mut r, &[f], 0.5);
            layer.activation = SReluParams::uniform(f, -0.6, 0.2, 0.7, 0.6);
            let x = random(&mut r, &[c, len], 1.5);
            let (y, cache) = layer.forward_cached(&x).unwrap();
            let proj = random(&mut r, y.shape(), 1.0);
            let (g, dx) = layer.backward(&cache, &proj).unwrap();

            let mut set = layer.param_set();
            set.insert("input", x);
            let mut analytic = g.param_set();
            analytic.insert("input", dx);
            let loss = |p: &ParamSet| {
                Ok(project(&proj, &conv_from(p).forward(p.get("input").unwrap())?))
            };
            let report = grad_check(loss, &set, &analytic, 1e-5).unwrap();
            assert!(report.max_rel_error < 1e-4, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn forward_equals_double_loop_oracle() {
        for seed in 0..100 {
            let mut r = rng(seed);
            let (f, c, k) = (r.random_range(1..5), r.random_range(1..6), r.random_range(1..5));
            let len = k + r.random_range(0..8);
            let mut layer = Conv1dLayer::new(&mut r, f, c, k);
            layer.bias = random(&mut r, &[f], 1.0);
            layer.activation = SReluParams::uniform(f, -0.4, 0.3, 0.5, 1.7);
            let x = random(&mut r, &[c, len], 2.0);
            let out = layer.forward(&x).unwrap();
            let out_len = len - k + 1;
            assert_eq!(out.shape(), &[f, out_len]);
            for fi in 0..f {
                for j in 0..out_len {
                    let mut acc = 0.0;
                    for ci in 0..c {
                        for u in 0..k {
                            acc += layer.kernels.data()[(fi * c + ci) * k + u] * x.at(ci, j + u);
                        }
                    }
                    let expect = layer.activation.apply(fi, acc + layer.bias.data()[fi]);
                    assert_eq!(out.at(fi, j), expect, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut r = rng(7);
        let layer = Conv1dLayer::new(&mut r, 2, 2, 2);
        let x = random(&mut r, &[2, 5], 1.0);
        let (y, cache) = layer.forward_cached(&x).unwrap();
        let (g, dx) = layer.backward(&cache, &Tensor::zeros(y.shape())).unwrap();
        assert!(g.params().iter().all(|(_, t)| t.data().iter().all(|v| *v == 0.0)));
        assert!(dx.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mismatched_cache_is_state_error() {
        let mut r = rng(8);
        let layer = Conv1dLayer::new(&mut r, 2, 2, 2);
        let (_, cache) = layer.forward_cached(&random(&mut r, &[2, 5], 1.0)).unwrap();
        assert!(matches!(
            layer.backward(&cache, &Tensor::zeros(&[2, 3])),
            Err(Error::State(_))
        ));
    }
}

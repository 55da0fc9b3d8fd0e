use crate::error::{Error, Result};
use crate::params::Params;
use crate::tensor::Tensor;

/// S-shaped rectified linear unit with one knot/slope quadruple per channel.
///
/// `f(x) = t_r + a_r (x - t_r)` for `x >= t_r`, `x` for `t_l < x < t_r`, and
/// `t_l + a_l (x - t_l)` for `x <= t_l`. The knots are free parameters: the
/// ordering `t_l <= t_r` holds at initialization and is not re-imposed later.
#[derive(Debug, Clone, PartialEq)]
pub struct SReluParams {
    pub t_left: Tensor,
    pub a_left: Tensor,
    pub t_right: Tensor,
    pub a_right: Tensor,
}

impl SReluParams {
    /// ReLU-equivalent start: `t_l = 0, a_l = 0, t_r = 1, a_r = 1`.
    pub fn new(channels: usize) -> Self {
        Self::uniform(channels, 0.0, 0.0, 1.0, 1.0)
    }

    pub fn uniform(channels: usize, t_left: f64, a_left: f64, t_right: f64, a_right: f64) -> Self {
        Self {
            t_left: Tensor::filled(&[channels], t_left),
            a_left: Tensor::filled(&[channels], a_left),
            t_right: Tensor::filled(&[channels], t_right),
            a_right: Tensor::filled(&[channels], a_right),
        }
    }

    pub fn channels(&self) -> usize {
        self.t_left.len()
    }

    #[inline]
    pub fn apply(&self, channel: usize, x: f64) -> f64 {
        let tl = self.t_left.data()[channel];
        let tr = self.t_right.data()[channel];
        if x >= tr {
            tr + self.a_right.data()[channel] * (x - tr)
        } else if x <= tl {
            tl + self.a_left.data()[channel] * (x - tl)
        } else {
            x
        }
    }

    /// Applies the activation row-wise to `x: [channels x len]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let ch = self.channels();
        if x.rows() != ch {
            return Err(Error::dim("srelu_forward", x.shape(), &[ch]));
        }
        let cols = x.cols();
        let mut out = x.clone();
        for (c, row) in out.data_mut().chunks_exact_mut(cols).enumerate() {
            for v in row {
                *v = self.apply(c, *v);
            }
        }
        Ok(out)
    }

    /// Returns `(parameter grads, input grad)` for pre-activation `x`.
    pub fn backward(&self, x: &Tensor, upstream: &Tensor) -> Result<(SReluParams, Tensor)> {
        if x.shape() != upstream.shape() || x.rows() != self.channels() {
            return Err(Error::dim("srelu_backward", x.shape(), upstream.shape()));
        }
        let cols = x.cols();
        let mut grads = SReluParams::uniform(self.channels(), 0.0, 0.0, 0.0, 0.0);
        let mut dx = Tensor::zeros(x.shape());
        for c in 0..self.channels() {
            let tl = self.t_left.data()[c];
            let al = self.a_left.data()[c];
            let tr = self.t_right.data()[c];
            let ar = self.a_right.data()[c];
            let (mut g_tl, mut g_al, mut g_tr, mut g_ar) = (0.0, 0.0, 0.0, 0.0);
            for j in 0..cols {
                let idx = c * cols + j;
                let xv = x.data()[idx];
                let g = upstream.data()[idx];
                dx.data_mut()[idx] = if xv >= tr {
                    g_tr += g * (1.0 - ar);
                    g_ar += g * (xv - tr);
                    g * ar
                } else if xv <= tl {
                    g_tl += g * (1.0 - al);
                    g_al += g * (xv - tl);
                    g * al
                } else {
                    g
                };
            }
            grads.t_left.data_mut()[c] = g_tl;
            grads.a_left.data_mut()[c] = g_al;
            grads.t_right.data_mut()[c] = g_tr;
            grads.a_right.data_mut()[c] = g_ar;
        }
        Ok((grads, dx))
    }
}

impl Params for SReluParams {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("t_left".into(), &self.t_left),
            ("a_left".into(), &self.a_left),
            ("t_right".into(), &self.t_right),
            ("a_right".into(), &self.a_right),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("t_left".into(), &mut self.t_left),
            ("a_left".into(), &mut self.a_left),
            ("t_right".into(), &mut self.t_right),
            ("a_right".into(), &mut self.a_right),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::nn::test_util::{project, random, rng};
    use crate::params::ParamSet;
    use rand::Rng;

    #[test]
    fn default_is_relu() {
        let s = SReluParams::new(1);
        assert_eq!(s.apply(0, -2.0), 0.0);
        assert_eq!(s.apply(0, 0.5), 0.5);
        assert_eq!(s.apply(0, 3.0), 3.0);
    }

    #[test]
    fn right_segment_slope() {
        let s = SReluParams::uniform(1, 0.0, 0.0, 1.0, 0.5);
        assert_eq!(s.apply(0, 3.0), 2.0);
    }

    #[test]
    fn unit_slopes_give_identity() {
        let s = SReluParams::uniform(1, -0.7, 1.0, 1.3, 1.0);
        for x in [-5.0, -0.7, 0.0, 1.3, 8.0] {
            assert_eq!(s.apply(0, x), x);
        }
    }

    #[test]
    fn continuous_at_knots() {
        let mut r = rng(5);
        for _ in 0..100 {
            let tl = r.random_range(-2.0..0.0);
            let tr = r.random_range(0.0..2.0);
            let s = SReluParams::uniform(1, tl, r.random_range(-1.0..1.0), tr, r.random_range(-1.0..2.0));
            let eps = 1e-9;
            assert!((s.apply(0, tl - eps) - s.apply(0, tl + eps)).abs() < 1e-8);
            assert!((s.apply(0, tr - eps) - s.apply(0, tr + eps)).abs() < 1e-8);
        }
    }

    #[test]
    fn channel_mismatch_is_dimension_error() {
        let s = SReluParams::new(2);
        assert!(s.forward(&Tensor::zeros(&[3, 4])).is_err());
    }

    fn layer_from(set: &ParamSet) -> SReluParams {
        SReluParams {
            t_left: set.get("t_left").unwrap().clone(),
            a_left: set.get("a_left").unwrap().clone(),
            t_right: set.get("t_right").unwrap().clone(),
            a_right: set.get("a_right").unwrap().clone(),
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..20 {
            let mut r = rng(seed);
            let ch = 3;
            let mut s = SReluParams::new(ch);
            for c in 0..ch {
                s.t_left.data_mut()[c] = r.random_range(-1.0..-0.2);
                s.t_right.data_mut()[c] = r.random_range(0.2..1.0);
                s.a_left.data_mut()[c] = r.random_range(-0.5..0.5);
                s.a_right.data_mut()[c] = r.random_range(0.5..1.5);
            }
            let x = random(&mut r, &[ch, 5], 2.0);
            let proj = random(&mut r, &[ch, 5], 1.0);
            let mut set = s.param_set();
            set.insert("input", x.clone());

            let (g, dx) = s.backward(&x, &proj).unwrap();
            let mut analytic = g.param_set();
            analytic.insert("input", dx);

            let loss = |p: &ParamSet| {
                let layer = layer_from(p);
                Ok(project(&proj, &layer.forward(p.get("input").unwrap())?))
            };
            let report = grad_check(loss, &set, &analytic, 1e-5).unwrap();
            assert!(report.max_rel_error < 1e-4, "seed {seed}: {report:?}");
        }
    }
}

use rand::Rng;

use super::{glorot_uniform, sigmoid};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::tensor::Tensor;

/// LSTM cell with diagonal peephole connections.
///
/// ```text
/// I = sigmoid(W_i x + U_i h' + w_ci * c' + b_i)
/// F = sigmoid(W_f x + U_f h' + w_cf * c' + b_f)
/// C = I * tanh(W_c x + U_c h' + b_c) + F * c'
/// O = sigmoid(W_o x + U_o h' + v_o * C + b_o)
/// H = O * tanh(C)
/// ```
///
/// The output-gate peephole reads the freshly computed cell state `C`, not `c'`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_i: Tensor,
    pub w_f: Tensor,
    pub w_c: Tensor,
    pub w_o: Tensor,
    pub u_i: Tensor,
    pub u_f: Tensor,
    pub u_c: Tensor,
    pub u_o: Tensor,
    pub w_ci: Tensor,
    pub w_cf: Tensor,
    pub v_o: Tensor,
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_c: Tensor,
    pub b_o: Tensor,
}

/// Activations of one step, enough to run the step backwards.
#[derive(Debug, Clone)]
pub struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    input_gate: Vec<f64>,
    forget_gate: Vec<f64>,
    candidate: Vec<f64>,
    output_gate: Vec<f64>,
    cell: Vec<f64>,
    tanh_cell: Vec<f64>,
}

impl StepCache {
    pub fn hidden(&self) -> Vec<f64> {
        self.output_gate
            .iter()
            .zip(&self.tanh_cell)
            .map(|(o, t)| o * t)
            .collect()
    }

    pub fn cell(&self) -> &[f64] {
        &self.cell
    }

    pub fn gates(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.input_gate, &self.forget_gate, &self.output_gate)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SequenceCache {
    pub steps: Vec<StepCache>,
}

impl SequenceCache {
    pub fn hidden_states(&self) -> Vec<Tensor> {
        self.steps.iter().map(|s| Tensor::vector(s.hidden())).collect()
    }

    pub fn last_hidden(&self) -> Option<Tensor> {
        self.steps.last().map(|s| Tensor::vector(s.hidden()))
    }
}

#[derive(Debug, Clone)]
pub struct LstmSequenceGrads {
    pub params: LstmCell,
    pub inputs: Vec<Tensor>,
    pub h0: Tensor,
    pub c0: Tensor,
}

impl LstmCell {
    /// Glorot-uniform input/recurrent weights, zero peepholes and biases,
    /// forget bias 1.
    pub fn new<R: Rng + ?Sized>(rng: &mut R, input: usize, hidden: usize) -> Self {
        let mut w = || glorot_uniform(rng, &[hidden, input], input, hidden);
        let (w_i, w_f, w_c, w_o) = (w(), w(), w(), w());
        let mut u = || glorot_uniform(rng, &[hidden, hidden], hidden, hidden);
        let (u_i, u_f, u_c, u_o) = (u(), u(), u(), u());
        let z = || Tensor::zeros(&[hidden]);
        Self {
            w_i,
            w_f,
            w_c,
            w_o,
            u_i,
            u_f,
            u_c,
            u_o,
            w_ci: z(),
            w_cf: z(),
            v_o: z(),
            b_i: z(),
            b_f: Tensor::filled(&[hidden], 1.0),
            b_c: z(),
            b_o: z(),
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let m = || Tensor::zeros(&[hidden, input]);
        let r = || Tensor::zeros(&[hidden, hidden]);
        let v = || Tensor::zeros(&[hidden]);
        Self {
            w_i: m(),
            w_f: m(),
            w_c: m(),
            w_o: m(),
            u_i: r(),
            u_f: r(),
            u_c: r(),
            u_o: r(),
            w_ci: v(),
            w_cf: v(),
            v_o: v(),
            b_i: v(),
            b_f: v(),
            b_c: v(),
            b_o: v(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_i.shape()[1]
    }

    pub fn hidden_size(&self) -> usize {
        self.w_i.shape()[0]
    }

    /// One step from `(h_prev, c_prev)`; returns `(H, C)`.
    pub fn step(&self, x: &Tensor, h_prev: &Tensor, c_prev: &Tensor) -> Result<(Tensor, Tensor)> {
        let cache = self.step_cached(x.data(), h_prev.data(), c_prev.data())?;
        Ok((Tensor::vector(cache.hidden()), Tensor::vector(cache.cell)))
    }

    pub fn step_cached(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<StepCache> {
        let hs = self.hidden_size();
        if x.len() != self.input_size() {
            return Err(Error::dim("lstm_step input", &[x.len()], self.w_i.shape()));
        }
        if h_prev.len() != hs || c_prev.len() != hs {
            return Err(Error::dim("lstm_step state", &[h_prev.len(), c_prev.len()], &[hs, hs]));
        }
        let pre = |w: &Tensor, u: &Tensor, b: &Tensor| -> Result<Vec<f64>> {
            let mut a = w.matvec(x)?;
            let r = u.matvec(h_prev)?;
            for ((a, r), b) in a.iter_mut().zip(r).zip(b.data()) {
                *a += r + b;
            }
            Ok(a)
        };

        let mut input_gate = pre(&self.w_i, &self.u_i, &self.b_i)?;
        let mut forget_gate = pre(&self.w_f, &self.u_f, &self.b_f)?;
        let mut candidate = pre(&self.w_c, &self.u_c, &self.b_c)?;
        let mut output_gate = pre(&self.w_o, &self.u_o, &self.b_o)?;
        let mut cell = vec![0.0; hs];
        let mut tanh_cell = vec![0.0; hs];
        for k in 0..hs {
            input_gate[k] = sigmoid(input_gate[k] + self.w_ci.data()[k] * c_prev[k]);
            forget_gate[k] = sigmoid(forget_gate[k] + self.w_cf.data()[k] * c_prev[k]);
            candidate[k] = candidate[k].tanh();
            cell[k] = input_gate[k] * candidate[k] + forget_gate[k] * c_prev[k];
            output_gate[k] = sigmoid(output_gate[k] + self.v_o.data()[k] * cell[k]);
            tanh_cell[k] = cell[k].tanh();
        }
        Ok(StepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            input_gate,
            forget_gate,
            candidate,
            output_gate,
            cell,
            tanh_cell,
        })
    }

    /// Folds `step` over `inputs` and returns every hidden state `H_0..H_{n-1}`.
    pub fn sequence_forward(
        &self,
        inputs: &[Tensor],
        h0: Option<&Tensor>,
        c0: Option<&Tensor>,
    ) -> Result<Vec<Tensor>> {
        Ok(self.sequence_forward_cached(inputs, h0, c0)?.hidden_states())
    }

    pub fn sequence_forward_cached(
        &self,
        inputs: &[Tensor],
        h0: Option<&Tensor>,
        c0: Option<&Tensor>,
    ) -> Result<SequenceCache> {
        if inputs.is_empty() {
            return Err(Error::Domain("LSTM sequence must be nonempty".into()));
        }
        let hs = self.hidden_size();
        let mut h = h0.map_or_else(|| vec![0.0; hs], |t| t.data().to_vec());
        let mut c = c0.map_or_else(|| vec![0.0; hs], |t| t.data().to_vec());
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            let cache = self.step_cached(x.data(), &h, &c)?;
            h = cache.hidden();
            c.clone_from(&cache.cell);
            steps.push(cache);
        }
        Ok(SequenceCache { steps })
    }

    /// Backward through one step.
    ///
    /// `d_hidden` and `d_cell` are the total gradients flowing into this step's
    /// `H` and `C`. Parameter gradients are accumulated into `grads`; returns
    /// `(dx, dh_prev, dc_prev)`.
    pub fn step_backward(
        &self,
        cache: &StepCache,
        d_hidden: &[f64],
        d_cell: &[f64],
        grads: &mut LstmCell,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let hs = self.hidden_size();
        if d_hidden.len() != hs || d_cell.len() != hs || cache.cell.len() != hs {
            return Err(Error::State(format!(
                "LSTM step cache/gradient size mismatch (hidden {hs})"
            )));
        }
        let mut d_in = vec![0.0; hs];
        let mut d_fg = vec![0.0; hs];
        let mut d_cand = vec![0.0; hs];
        let mut d_out = vec![0.0; hs];
        let mut dc_prev = vec![0.0; hs];
        for k in 0..hs {
            let o = cache.output_gate[k];
            let tc = cache.tanh_cell[k];
            let d_o_pre = d_hidden[k] * tc * o * (1.0 - o);
            let dc = d_cell[k] + d_hidden[k] * o * (1.0 - tc * tc) + d_o_pre * self.v_o.data()[k];

            let i = cache.input_gate[k];
            let f = cache.forget_gate[k];
            let g = cache.candidate[k];
            let d_i_pre = dc * g * i * (1.0 - i);
            let d_f_pre = dc * cache.c_prev[k] * f * (1.0 - f);
            let d_g_pre = dc * i * (1.0 - g * g);

            dc_prev[k] = dc * f + d_i_pre * self.w_ci.data()[k] + d_f_pre * self.w_cf.data()[k];

            grads.w_ci.data_mut()[k] += d_i_pre * cache.c_prev[k];
            grads.w_cf.data_mut()[k] += d_f_pre * cache.c_prev[k];
            grads.v_o.data_mut()[k] += d_o_pre * cache.cell[k];
            grads.b_i.data_mut()[k] += d_i_pre;
            grads.b_f.data_mut()[k] += d_f_pre;
            grads.b_c.data_mut()[k] += d_g_pre;
            grads.b_o.data_mut()[k] += d_o_pre;

            d_in[k] = d_i_pre;
            d_fg[k] = d_f_pre;
            d_cand[k] = d_g_pre;
            d_out[k] = d_o_pre;
        }

        let mut dx = vec![0.0; self.input_size()];
        let mut dh_prev = vec![0.0; hs];
        for (w, u, gw, gu, d) in [
            (&self.w_i, &self.u_i, &mut grads.w_i, &mut grads.u_i, &d_in),
            (&self.w_f, &self.u_f, &mut grads.w_f, &mut grads.u_f, &d_fg),
            (&self.w_c, &self.u_c, &mut grads.w_c, &mut grads.u_c, &d_cand),
            (&self.w_o, &self.u_o, &mut grads.w_o, &mut grads.u_o, &d_out),
        ] {
            gw.add_outer(d, &cache.x)?;
            gu.add_outer(d, &cache.h_prev)?;
            for (a, b) in dx.iter_mut().zip(w.matvec_t(d)?) {
                *a += b;
            }
            for (a, b) in dh_prev.iter_mut().zip(u.matvec_t(d)?) {
                *a += b;
            }
        }
        Ok((dx, dh_prev, dc_prev))
    }

    /// Backpropagation through time.
    ///
    /// `d_hidden[q]` is the gradient arriving at `H_q` from outside the
    /// recurrence (one entry per cached step).
    pub fn sequence_backward(
        &self,
        cache: &SequenceCache,
        d_hidden: &[Tensor],
    ) -> Result<LstmSequenceGrads> {
        if cache.steps.is_empty() {
            return Err(Error::State("LSTM backward without a forward cache".into()));
        }
        if d_hidden.len() != cache.steps.len() {
            return Err(Error::State(format!(
                "LSTM cache has {} steps but {} upstream gradients were given",
                cache.steps.len(),
                d_hidden.len()
            )));
        }
        let hs = self.hidden_size();
        let mut grads = LstmCell::zeros(self.input_size(), hs);
        let mut inputs = vec![Tensor::vector(vec![]); cache.steps.len()];
        let mut dh = vec![0.0; hs];
        let mut dc = vec![0.0; hs];
        for q in (0..cache.steps.len()).rev() {
            let upstream = d_hidden[q].data();
            if upstream.len() != hs {
                return Err(Error::dim("lstm_backward", &[upstream.len()], &[hs]));
            }
            for (a, b) in dh.iter_mut().zip(upstream) {
                *a += b;
            }
            let (dx, dh_prev, dc_prev) = self.step_backward(&cache.steps[q], &dh, &dc, &mut grads)?;
            inputs[q] = Tensor::vector(dx);
            dh = dh_prev;
            dc = dc_prev;
        }
        Ok(LstmSequenceGrads {
            params: grads,
            inputs,
            h0: Tensor::vector(dh),
            c0: Tensor::vector(dc),
        })
    }
}

impl Params for LstmCell {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("w_i".into(), &self.w_i),
            ("w_f".into(), &self.w_f),
            ("w_c".into(), &self.w_c),
            ("w_o".into(), &self.w_o),
            ("u_i".into(), &self.u_i),
            ("u_f".into(), &self.u_f),
            ("u_c".into(), &self.u_c),
            ("u_o".into(), &self.u_o),
            ("w_ci".into(), &self.w_ci),
            ("w_cf".into(), &self.w_cf),
            ("v_o".into(), &self.v_o),
            ("b_i".into(), &self.b_i),
            ("b_f".into(), &self.b_f),
            ("b_c".into(), &self.b_c),
            ("b_o".into(), &self.b_o),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("w_i".into(), &mut self.w_i),
            ("w_f".into(), &mut self.w_f),
            ("w_c".into(), &mut self.w_c),
            ("w_o".into(), &mut self.w_o),
            ("u_i".into(), &mut self.u_i),
            ("u_f".into(), &mut self.u_f),
            ("u_c".into(), &mut self.u_c),
            ("u_o".into(), &mut self.u_o),
            ("w_ci".into(), &mut self.w_ci),
            ("w_cf".into(), &mut self.w_cf),
            ("v_o".into(), &mut self.v_o),
            ("b_i".into(), &mut self.b_i),
            ("b_f".into(), &mut self.b_f),
            ("b_c".into(), &mut self.b_c),
            ("b_o".into(), &mut self.b_o),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::nn::test_util::{project, random, rng};
    use crate::params::ParamSet;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_cell(r: &mut ChaCha8Rng, input: usize, hidden: usize) -> LstmCell {
        let mut cell = LstmCell::new(r, input, hidden);
        for (_, t) in cell.params_mut() {
            let shape = t.shape().to_vec();
            *t = random(r, &shape, 0.8);
        }
        cell
    }

    fn cell_from(set: &ParamSet, input: usize, hidden: usize) -> LstmCell {
        let mut cell = LstmCell::zeros(input, hidden);
        for (name, t) in cell.params_mut() {
            *t = set.get(&name).unwrap().clone();
        }
        cell
    }

    #[test]
    fn zero_cell_from_zero_state() {
        let cell = LstmCell::zeros(3, 4);
        let cache = cell.step_cached(&[0.3, -1.0, 2.0], &[0.0; 4], &[0.0; 4]).unwrap();
        let (i, f, o) = cache.gates();
        assert!(i.iter().chain(f).chain(o).all(|&g| g == 0.5));
        assert!(cache.cell().iter().all(|&c| c == 0.0));
        assert!(cache.hidden().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn saturated_forget_gate_preserves_memory() {
        let mut cell = LstmCell::zeros(2, 3);
        cell.b_f = Tensor::filled(&[3], 10.0);
        cell.b_i = Tensor::filled(&[3], -10.0);
        let c_prev = [1.5, -0.4, 3.0];
        let (_, c) = cell
            .step(&Tensor::vector(vec![0.7, -0.2]), &Tensor::zeros(&[3]), &Tensor::vector(c_prev.to_vec()))
            .unwrap();
        for (cq, cp) in c.data().iter().zip(c_prev) {
            assert!((cq - cp).abs() < 1e-4 * cp.abs());
        }
    }

    #[test]
    fn gates_stay_in_open_unit_interval() {
        for seed in 0..50 {
            let mut r = rng(seed);
            let cell = random_cell(&mut r, 4, 5);
            let x = random(&mut r, &[4], 3.0);
            let h = random(&mut r, &[5], 1.0);
            let c = random(&mut r, &[5], 3.0);
            let cache = cell.step_cached(x.data(), h.data(), c.data()).unwrap();
            let (i, f, o) = cache.gates();
            assert!(i.iter().chain(f).chain(o).all(|&g| g > 0.0 && g < 1.0));
            assert!(cache.hidden().iter().all(|&v| v > -1.0 && v < 1.0));
        }
    }

    #[test]
    fn single_element_sequence_equals_step() {
        let mut r = rng(11);
        let cell = random_cell(&mut r, 3, 2);
        let x = random(&mut r, &[3], 1.0);
        let seq = cell.sequence_forward(&[x.clone()], None, None).unwrap();
        let (h, _) = cell.step(&x, &Tensor::zeros(&[2]), &Tensor::zeros(&[2])).unwrap();
        assert_eq!(seq, vec![h]);
    }

    #[test]
    fn zero_cell_sequence_is_all_zero() {
        let cell = LstmCell::zeros(3, 4);
        let mut r = rng(12);
        let xs: Vec<Tensor> = (0..5).map(|_| random(&mut r, &[3], 2.0)).collect();
        let hs = cell.sequence_forward(&xs, None, None).unwrap();
        assert_eq!(hs.len(), 5);
        assert!(hs.iter().all(|h| h.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn full_size_short_term_feature_count() {
        let cell = LstmCell::new(&mut rng(0), 33, 40);
        let xs = vec![Tensor::zeros(&[33]); 15];
        let total: usize = cell.sequence_forward(&xs, None, None).unwrap().iter().map(Tensor::len).sum();
        assert_eq!(total, 600);
    }

    #[test]
    fn empty_sequence_is_domain_error() {
        let cell = LstmCell::zeros(1, 1);
        assert!(matches!(cell.sequence_forward(&[], None, None), Err(Error::Domain(_))));
    }

    #[test]
    fn wrong_input_size_is_dimension_error() {
        let cell = LstmCell::zeros(3, 2);
        let r = cell.step(&Tensor::zeros(&[2]), &Tensor::zeros(&[2]), &Tensor::zeros(&[2]));
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn backward_with_mismatched_cache_is_state_error() {
        let cell = LstmCell::zeros(2, 2);
        let cache = cell.sequence_forward_cached(&[Tensor::zeros(&[2])], None, None).unwrap();
        let r = cell.sequence_backward(&cache, &[Tensor::zeros(&[2]), Tensor::zeros(&[2])]);
        assert!(matches!(r, Err(Error::State(_))));
        assert!(matches!(
            cell.sequence_backward(&SequenceCache::default(), &[]),
            Err(Error::State(_))
        ));
    }

    /// Checks parameters, every input, and both initial states.
    fn check_sequence(seed: u64, len: usize) -> f64 {
        let (inp, hid) = (3, 4);
        let mut r = rng(seed);
        let cell = random_cell(&mut r, inp, hid);
        let xs: Vec<Tensor> = (0..len).map(|_| random(&mut r, &[inp], 1.0)).collect();
        let h0 = random(&mut r, &[hid], 0.5);
        let c0 = random(&mut r, &[hid], 0.5);
        let projs: Vec<Tensor> = (0..len).map(|_| random(&mut r, &[hid], 1.0)).collect();

        let cache = cell.sequence_forward_cached(&xs, Some(&h0), Some(&c0)).unwrap();
        let g = cell.sequence_backward(&cache, &projs).unwrap();

        let mut set = cell.param_set();
        let mut analytic = g.params.param_set();
        for q in 0..len {
            set.insert(format!("x{q}"), xs[q].clone());
            analytic.insert(format!("x{q}"), g.inputs[q].clone());
        }
        set.insert("h0", h0);
        set.insert("c0", c0);
        analytic.insert("h0", g.h0.clone());
        analytic.insert("c0", g.c0.clone());

        let loss = |p: &ParamSet| {
            let c = cell_from(p, inp, hid);
            let xs: Vec<Tensor> = (0..len).map(|q| p.get(&format!("x{q}")).unwrap().clone()).collect();
            let hs = c.sequence_forward(&xs, p.get("h0"), p.get("c0"))?;
            Ok(hs.iter().zip(&projs).map(|(h, r)| project(r, h)).sum())
        };
        grad_check(loss, &set, &analytic, 1e-5).unwrap().max_rel_error
    }

    #[test]
    fn step_backward_matches_finite_differences() {
        for seed in 0..20 {
            let err = check_sequence(300 + seed, 1);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn sequence_backward_matches_finite_differences() {
        for seed in 0..20 {
            let err = check_sequence(400 + seed, 5);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }
}

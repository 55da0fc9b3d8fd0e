//! The full forecaster: spatial convolution stack, short-term LSTM, coupled
//! weekly/daily LSTMs and a linear fusion layer over all branch features.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{NormStats, WindowConfig, WindowedSample};
use crate::error::{Error, Result};
use crate::nn::{grad_check, Conv1dLayer, ConvCache, DenseLayer, GradCheckReport, LstmCell, SequenceCache};
use crate::params::{prefixed, ParamSet, Params};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub filters: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltfpConfig {
    pub locations: usize,
    pub window: WindowConfig,
    pub conv: Vec<ConvSpec>,
    pub short_hidden: usize,
    pub periodic_hidden: usize,
    /// L1 weight on the fusion-layer weights.
    pub l1_weight: f64,
}

impl CltfpConfig {
    /// Three 30-filter layers of lengths 3, 3, 2; hidden sizes 40 and 25;
    /// L1 weight 0.002; windows 15 / 6 / 6.
    pub fn full_size(locations: usize) -> Self {
        Self {
            locations,
            window: WindowConfig::default(),
            conv: vec![
                ConvSpec { filters: 30, length: 3 },
                ConvSpec { filters: 30, length: 3 },
                ConvSpec { filters: 30, length: 2 },
            ],
            short_hidden: 40,
            periodic_hidden: 25,
            l1_weight: 0.002,
        }
    }

    /// Spatial extent left after the valid convolutions, if positive.
    pub fn spatial_extent(&self) -> Option<usize> {
        self.conv.iter().try_fold(self.locations, |len, spec| {
            (len + 1).checked_sub(spec.length).filter(|&l| l > 0 && spec.length > 0)
        })
    }

    pub fn blocks(&self) -> Result<FeatureBlocks> {
        let extent = self.spatial_extent().ok_or_else(|| {
            Error::Config(format!(
                "convolution stack {:?} shrinks {} locations below one position",
                self.conv, self.locations
            ))
        })?;
        let last_filters = self.conv.last().map_or(self.window.recent, |c| c.filters);
        let spatial = extent * last_filters;
        let short = self.window.recent * self.short_hidden;
        let weekly = self.window.weekly_len() * self.periodic_hidden;
        let daily = self.window.daily_len() * self.periodic_hidden;
        Ok(FeatureBlocks {
            spatial: 0..spatial,
            short_term: spatial..spatial + short,
            weekly: spatial + short..spatial + short + weekly,
            daily: spatial + short + weekly..spatial + short + weekly + daily,
        })
    }

    pub fn fusion_width(&self) -> Result<usize> {
        Ok(self.blocks()?.width())
    }

    pub fn validate(&self) -> Result<()> {
        if self.locations == 0 || self.window.recent == 0 {
            return Err(Error::Config("locations and recent window must be positive".into()));
        }
        if self.short_hidden == 0 || self.periodic_hidden == 0 {
            return Err(Error::Config("hidden sizes must be positive".into()));
        }
        if self.conv.iter().any(|c| c.filters == 0 || c.length == 0) {
            return Err(Error::Config("conv filters and lengths must be positive".into()));
        }
        if !(self.l1_weight >= 0.0 && self.l1_weight.is_finite()) {
            return Err(Error::Config(format!("l1 weight {} must be >= 0", self.l1_weight)));
        }
        self.blocks().map(|_| ())
    }
}

/// Column ranges of each branch inside the fusion vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBlocks {
    pub spatial: Range<usize>,
    pub short_term: Range<usize>,
    pub weekly: Range<usize>,
    pub daily: Range<usize>,
}

impl FeatureBlocks {
    pub fn width(&self) -> usize {
        self.daily.end
    }

    /// Weekly and daily features together.
    pub fn periodic(&self) -> Range<usize> {
        self.weekly.start..self.daily.end
    }
}

/// Branch outputs for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchFeatures {
    pub spatial: Tensor,
    pub short_term: Tensor,
    /// Weekly features followed by daily features.
    pub periodic: Tensor,
}

impl BranchFeatures {
    /// Spatial, then short-term, then weekly, then daily.
    pub fn concat(&self) -> Tensor {
        let mut v = Vec::with_capacity(self.spatial.len() + self.short_term.len() + self.periodic.len());
        v.extend_from_slice(self.spatial.data());
        v.extend_from_slice(self.short_term.data());
        v.extend_from_slice(self.periodic.data());
        Tensor::vector(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltfpModel {
    pub config: CltfpConfig,
    pub conv: Vec<Conv1dLayer>,
    pub short_term: LstmCell,
    pub weekly: LstmCell,
    pub daily: LstmCell,
    pub fusion: DenseLayer,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    conv: Vec<ConvCache>,
    short_term: SequenceCache,
    weekly: SequenceCache,
    daily: SequenceCache,
    fusion_input: Tensor,
    pub prediction: Tensor,
}

/// Initial `(H, C)` of the daily LSTM, derived from the finished weekly pass.
///
/// The daily LSTM starts from the weekly LSTM's last hidden state with a zero
/// cell state. Backward routes the daily `dH_0` into the weekly last step.
fn daily_initial_state(weekly: &SequenceCache) -> (Option<Tensor>, Option<Tensor>) {
    (weekly.last_hidden(), None)
}

impl CltfpModel {
    pub fn build(config: CltfpConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let width = config.fusion_width()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut channels = config.window.recent;
        let mut conv = Vec::with_capacity(config.conv.len());
        for spec in &config.conv {
            conv.push(Conv1dLayer::new(&mut rng, spec.filters, channels, spec.length));
            channels = spec.filters;
        }
        let p = config.locations;
        let short_term = LstmCell::new(&mut rng, p, config.short_hidden);
        let weekly = LstmCell::new(&mut rng, p, config.periodic_hidden);
        let daily = LstmCell::new(&mut rng, p, config.periodic_hidden);
        let fusion = DenseLayer::new(&mut rng, width, p);
        Ok(Self {
            config,
            conv,
            short_term,
            weekly,
            daily,
            fusion,
        })
    }

    /// Same layout as `self`, every value zero. Used to hold gradients.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero_params();
        z
    }

    pub fn blocks(&self) -> FeatureBlocks {
        self.config.blocks().expect("validated at build")
    }

    fn check_sample(&self, sample: &WindowedSample) -> Result<()> {
        let c = &self.config;
        let p = c.locations;
        for (name, t, cols) in [
            ("recent", &sample.recent, c.window.recent),
            ("daily", &sample.daily, c.window.daily_len()),
            ("weekly", &sample.weekly, c.window.weekly_len()),
        ] {
            if t.shape() != [p, cols] {
                return Err(Error::dim(
                    if name == "recent" { "forward: recent window" } else { "forward: periodic window" },
                    t.shape(),
                    &[p, cols],
                ));
            }
        }
        if sample.target.len() != p {
            return Err(Error::dim("forward: target", sample.target.shape(), &[p]));
        }
        Ok(())
    }

    pub fn forward(&self, sample: &WindowedSample) -> Result<(Tensor, BranchFeatures)> {
        let trace = self.forward_trace(sample)?;
        let features = self.split_features(&trace.fusion_input);
        Ok((trace.prediction, features))
    }

    pub fn predict(&self, sample: &WindowedSample) -> Result<Tensor> {
        Ok(self.forward_trace(sample)?.prediction)
    }

    fn split_features(&self, fusion_input: &Tensor) -> BranchFeatures {
        let b = self.blocks();
        let d = fusion_input.data();
        BranchFeatures {
            spatial: Tensor::vector(d[b.spatial.clone()].to_vec()),
            short_term: Tensor::vector(d[b.short_term.clone()].to_vec()),
            periodic: Tensor::vector(d[b.periodic()].to_vec()),
        }
    }

    pub fn forward_trace(&self, sample: &WindowedSample) -> Result<ForwardTrace> {
        self.check_sample(sample)?;

        // Spatial branch: time steps are channels, locations the convolved axis.
        let mut x = sample.recent.transpose()?;
        let mut conv = Vec::with_capacity(self.conv.len());
        for layer in &self.conv {
            let (y, cache) = layer.forward_cached(&x)?;
            conv.push(cache);
            x = y;
        }

        let short_term = self
            .short_term
            .sequence_forward_cached(&sample.recent_columns(), None, None)?;
        let weekly = self
            .weekly
            .sequence_forward_cached(&sample.weekly_columns(), None, None)?;
        let (h0, c0) = daily_initial_state(&weekly);
        let daily = self
            .daily
            .sequence_forward_cached(&sample.daily_columns(), h0.as_ref(), c0.as_ref())?;

        let mut fused = Vec::with_capacity(self.fusion.inputs());
        fused.extend_from_slice(x.data());
        for cache in [&short_term, &weekly, &daily] {
            for step in &cache.steps {
                fused.extend(step.hidden());
            }
        }
        let fusion_input = Tensor::vector(fused);
        let prediction = self.fusion.forward(&fusion_input)?;
        Ok(ForwardTrace {
            conv,
            short_term,
            weekly,
            daily,
            fusion_input,
            prediction,
        })
    }

    /// Gradients of a scalar whose derivative w.r.t. the prediction is `d_pred`.
    pub fn backward(&self, trace: &ForwardTrace, d_pred: &Tensor) -> Result<CltfpModel> {
        if d_pred.len() != self.config.locations || trace.conv.len() != self.conv.len() {
            return Err(Error::State("forward trace does not belong to this model".into()));
        }
        let (fusion, d_fused) = self.fusion.backward(&trace.fusion_input, d_pred)?;
        let b = self.blocks();
        let d = d_fused.data();

        let per_step = |range: Range<usize>, hidden: usize| -> Vec<Tensor> {
            d[range].chunks(hidden).map(|c| Tensor::vector(c.to_vec())).collect()
        };
        let hp = self.config.periodic_hidden;

        let daily = self
            .daily
            .sequence_backward(&trace.daily, &per_step(b.daily.clone(), hp))?;
        let mut weekly_up = per_step(b.weekly.clone(), hp);
        if let Some(last) = weekly_up.last_mut() {
            last.add_assign(&daily.h0)?;
        }
        let weekly = self.weekly.sequence_backward(&trace.weekly, &weekly_up)?;
        let short_term = self.short_term.sequence_backward(
            &trace.short_term,
            &per_step(b.short_term.clone(), self.config.short_hidden),
        )?;

        let mut conv_grads = Vec::with_capacity(self.conv.len());
        let last_shape = match trace.conv.last() {
            Some(c) => c.pre_activation.shape().to_vec(),
            None => vec![self.config.window.recent, self.config.locations],
        };
        let mut upstream = Tensor::new(last_shape, d[b.spatial.clone()].to_vec())?;
        for (layer, cache) in self.conv.iter().zip(&trace.conv).rev() {
            let (g, dx) = layer.backward(cache, &upstream)?;
            conv_grads.push(g);
            upstream = dx;
        }
        conv_grads.reverse();

        Ok(CltfpModel {
            config: self.config.clone(),
            conv: conv_grads,
            short_term: short_term.params,
            weekly: weekly.params,
            daily: daily.params,
            fusion,
        })
    }

    /// `lambda * ||W_fusion||_1`; biases and other layers are not penalized.
    pub fn l1_penalty(&self) -> f64 {
        self.config.l1_weight * self.fusion.weights.data().iter().map(|w| w.abs()).sum::<f64>()
    }

    /// Adds the L1 subgradient `lambda * sign(w)` (0 at `w = 0`) to `grads`.
    pub fn add_l1_gradient(&self, grads: &mut CltfpModel) {
        let lambda = self.config.l1_weight;
        for (g, w) in grads
            .fusion
            .weights
            .data_mut()
            .iter_mut()
            .zip(self.fusion.weights.data())
        {
            if *w > 0.0 {
                *g += lambda;
            } else if *w < 0.0 {
                *g -= lambda;
            }
        }
    }

    /// Sum of squared errors over locations, without the penalty.
    pub fn squared_error(&self, sample: &WindowedSample) -> Result<f64> {
        let pred = self.predict(sample)?;
        Ok(sq_err(&pred, &sample.target))
    }

    /// Squared error plus the L1 penalty on fusion weights.
    pub fn loss(&self, sample: &WindowedSample) -> Result<f64> {
        Ok(self.squared_error(sample)? + self.l1_penalty())
    }

    /// Squared error of one sample and its gradient (no penalty).
    pub fn sample_gradient(&self, sample: &WindowedSample) -> Result<(f64, CltfpModel)> {
        let trace = self.forward_trace(sample)?;
        let d_pred = Tensor::vector(
            trace
                .prediction
                .data()
                .iter()
                .zip(sample.target.data())
                .map(|(p, t)| 2.0 * (p - t))
                .collect(),
        );
        let grads = self.backward(&trace, &d_pred)?;
        Ok((sq_err(&trace.prediction, &sample.target), grads))
    }

    pub fn loss_and_grad(&self, sample: &WindowedSample) -> Result<(f64, CltfpModel)> {
        self.batch_loss_and_grad(std::slice::from_ref(sample))
    }

    /// Summed sample losses plus one L1 term; per-sample work runs in
    /// parallel, accumulation follows sample order.
    pub fn batch_loss_and_grad(&self, samples: &[WindowedSample]) -> Result<(f64, CltfpModel)> {
        let parts: Vec<Result<(f64, CltfpModel)>> =
            samples.par_iter().map(|s| self.sample_gradient(s)).collect();
        let mut total = 0.0;
        let mut grads = self.zeros_like();
        for part in parts {
            let (loss, g) = part?;
            total += loss;
            grads.accumulate(&g)?;
        }
        self.add_l1_gradient(&mut grads);
        Ok((total + self.l1_penalty(), grads))
    }

    /// Fusion vectors (rows) and denormalized targets for a sample list.
    pub fn extract_features(
        &self,
        samples: &[WindowedSample],
        stats: &NormStats,
    ) -> Result<FeatureMatrix> {
        let blocks = self.blocks();
        let width = blocks.width();
        let p = self.config.locations;
        let rows: Vec<Result<(Tensor, Tensor)>> = samples
            .par_iter()
            .map(|s| {
                let (_, f) = self.forward(s)?;
                Ok((f.concat(), stats.denormalize(&s.target)?))
            })
            .collect();
        let mut x = Vec::with_capacity(samples.len() * width);
        let mut y = Vec::with_capacity(samples.len() * p);
        for row in rows {
            let (f, t) = row?;
            x.extend_from_slice(f.data());
            y.extend_from_slice(t.data());
        }
        Ok(FeatureMatrix {
            features: Tensor::new(vec![samples.len(), width], x)?,
            targets: Tensor::new(vec![samples.len(), p], y)?,
            blocks,
        })
    }
}

impl CltfpConfig {
    /// Tiny configuration for gradient checks: p=3, n=4, one-step periodic
    /// half-windows, one conv layer of 2 filters, hidden sizes 3.
    pub fn toy() -> Self {
        Self {
            locations: 3,
            window: WindowConfig {
                recent: 4,
                daily_half: 1,
                weekly_half: 1,
            },
            conv: vec![ConvSpec { filters: 2, length: 2 }],
            short_hidden: 3,
            periodic_hidden: 3,
            l1_weight: 0.002,
        }
    }
}

/// Sample with uniform values in `[-1.5, 1.5)` shaped for `cfg`.
pub fn random_sample<R: Rng + ?Sized>(cfg: &CltfpConfig, rng: &mut R) -> WindowedSample {
    let p = cfg.locations;
    let mut m = |cols: usize| {
        let data = (0..p * cols).map(|_| rng.random_range(-1.5..1.5)).collect();
        Tensor::matrix(p, cols, data).expect("sized to match")
    };
    let recent = m(cfg.window.recent);
    let daily = m(cfg.window.daily_len());
    let weekly = m(cfg.window.weekly_len());
    let target = Tensor::vector(m(1).into_data());
    WindowedSample {
        t: 0,
        recent,
        daily,
        weekly,
        target,
    }
}

/// Central-difference check of the full loss (squared error plus L1) on the
/// toy configuration, with every parameter jittered so all paths are live.
pub fn full_loss_grad_check(seed: u64, step: f64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = CltfpModel::build(CltfpConfig::toy(), seed)?;
    for (_, t) in model.params_mut() {
        for v in t.data_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    let s = random_sample(&model.config, &mut rng);
    let (_, grads) = model.loss_and_grad(&s)?;
    let loss = |p: &ParamSet| {
        let mut m = model.clone();
        m.load_param_set(p)?;
        m.loss(&s)
    };
    grad_check(loss, &model.param_set(), &grads.param_set(), step)
}

fn sq_err(pred: &Tensor, target: &Tensor) -> f64 {
    pred.data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum()
}

/// Row-per-sample fusion features with the branch boundaries recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub features: Tensor,
    pub targets: Tensor,
    pub blocks: FeatureBlocks,
}

impl Params for CltfpModel {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = Vec::new();
        for (k, layer) in self.conv.iter().enumerate() {
            v.extend(prefixed(&format!("conv{k}"), layer.params()));
        }
        v.extend(prefixed("short_term", self.short_term.params()));
        v.extend(prefixed("weekly", self.weekly.params()));
        v.extend(prefixed("daily", self.daily.params()));
        v.extend(prefixed("fusion", self.fusion.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut v = Vec::new();
        for (k, layer) in self.conv.iter_mut().enumerate() {
            v.extend(prefixed(&format!("conv{k}"), layer.params_mut()));
        }
        v.extend(prefixed("short_term", self.short_term.params_mut()));
        v.extend(prefixed("weekly", self.weekly.params_mut()));
        v.extend(prefixed("daily", self.daily.params_mut()));
        v.extend(prefixed("fusion", self.fusion.params_mut()));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_size_widths() {
        let cfg = CltfpConfig::full_size(33);
        let b = cfg.blocks().unwrap();
        assert_eq!(b.spatial.len(), 840);
        assert_eq!(b.short_term.len(), 600);
        assert_eq!(b.weekly.len(), 325);
        assert_eq!(b.daily.len(), 325);
        assert_eq!(b.width(), 2090);
        let model = CltfpModel::build(cfg, 1).unwrap();
        assert_eq!(model.fusion.weights.shape(), &[33, 2090]);
    }

    #[test]
    fn single_layer_boundary_extent() {
        let mut cfg = CltfpConfig::toy();
        cfg.conv = vec![ConvSpec { filters: 2, length: 3 }];
        assert_eq!(cfg.spatial_extent(), Some(1));
        cfg.conv.push(ConvSpec { filters: 2, length: 2 });
        assert!(matches!(CltfpModel::build(cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn build_is_seeded() {
        let a = CltfpModel::build(CltfpConfig::toy(), 5).unwrap();
        let b = CltfpModel::build(CltfpConfig::toy(), 5).unwrap();
        assert_eq!(a.param_set(), b.param_set());
        assert_ne!(a.param_set(), CltfpModel::build(CltfpConfig::toy(), 6).unwrap().param_set());
    }

    #[test]
    fn zero_fusion_predicts_bias() {
        let mut model = CltfpModel::build(CltfpConfig::toy(), 2).unwrap();
        model.fusion.weights = Tensor::zeros(model.fusion.weights.shape());
        model.fusion.bias = Tensor::vector(vec![0.3, -0.1, 2.0]);
        let s = random_sample(&model.config, &mut ChaCha8Rng::seed_from_u64(1));
        let (pred, f) = model.forward(&s).unwrap();
        assert_eq!(pred.data(), &[0.3, -0.1, 2.0]);
        assert_eq!(f.concat().len(), model.blocks().width());
    }

    #[test]
    fn zero_model_on_zero_sample() {
        let mut model = CltfpModel::build(CltfpConfig::toy(), 2).unwrap();
        model.zero_params();
        model.fusion.bias = Tensor::vector(vec![1.0, 2.0, 3.0]);
        let mut s = random_sample(&model.config, &mut ChaCha8Rng::seed_from_u64(1));
        for t in [&mut s.recent, &mut s.daily, &mut s.weekly] {
            t.data_mut().fill(0.0);
        }
        let (pred, f) = model.forward(&s).unwrap();
        assert!(f.concat().data().iter().all(|v| *v == 0.0));
        assert_eq!(pred.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn wrong_sample_shape_is_dimension_error() {
        let model = CltfpModel::build(CltfpConfig::toy(), 2).unwrap();
        let mut s = random_sample(&model.config, &mut ChaCha8Rng::seed_from_u64(1));
        s.recent = Tensor::zeros(&[3, 5]);
        assert!(matches!(model.forward(&s), Err(Error::Dimension { .. })));
    }

    #[test]
    fn loss_examples() {
        let mut cfg = CltfpConfig::toy();
        cfg.locations = 2;
        cfg.conv = vec![ConvSpec { filters: 1, length: 1 }];
        let mut model = CltfpModel::build(cfg, 0).unwrap();
        let mut s = random_sample(&model.config, &mut ChaCha8Rng::seed_from_u64(3));

        model.fusion.weights = Tensor::zeros(model.fusion.weights.shape());
        model.fusion.bias = s.target.clone();
        assert_eq!(model.loss(&s).unwrap(), 0.0);

        // Zero branches on a zero sample: every feature is 0, so prediction = bias.
        model.zero_params();
        for t in [&mut s.recent, &mut s.daily, &mut s.weekly] {
            t.data_mut().fill(0.0);
        }
        model.fusion.bias = Tensor::vector(vec![1.0, 2.0]);
        model.fusion.weights.data_mut()[0] = 1.0;
        model.fusion.weights.data_mut()[1] = -2.0;
        s.target = Tensor::vector(vec![0.0, 0.0]);
        assert!((model.loss(&s).unwrap() - 5.006).abs() < 1e-12);

        let base = model.l1_penalty();
        model.config.l1_weight *= 2.0;
        assert_eq!(model.l1_penalty(), 2.0 * base);
    }

    #[test]
    fn l1_subgradient_is_zero_at_zero() {
        let mut model = CltfpModel::build(CltfpConfig::toy(), 4).unwrap();
        model.fusion.weights = Tensor::zeros(model.fusion.weights.shape());
        let mut g = model.zeros_like();
        model.add_l1_gradient(&mut g);
        assert!(g.fusion.weights.data().iter().all(|v| *v == 0.0));
        let s = random_sample(&model.config, &mut ChaCha8Rng::seed_from_u64(0));
        let (l, _) = model.loss_and_grad(&s).unwrap();
        assert!(l.is_finite());
    }

    #[test]
    fn forward_is_deterministic() {
        let model = CltfpModel::build(CltfpConfig::toy(), 4).unwrap();
        let s = random_sample(&model.config, &mut ChaCha8Rng::seed_from_u64(0));
        let (a, fa) = model.forward(&s).unwrap();
        let (b, fb) = model.forward(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(fa, fb);
    }

    #[test]
    fn full_loss_matches_finite_differences() {
        for seed in 0..20 {
            let report = full_loss_grad_check(seed, 1e-4).unwrap();
            assert!(report.max_rel_error < 1e-4, "seed {seed}: {report:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn fusion_width_invariant(
            p in 2usize..12,
            recent in 1usize..6,
            dh in 0usize..3,
            wh in 0usize..3,
            layers in proptest::collection::vec((1usize..4, 1usize..3), 0..3),
            hs in 1usize..5,
            hp in 1usize..5,
            seed in any::<u64>(),
        ) {
            let conv: Vec<ConvSpec> = layers.iter().map(|&(f, l)| ConvSpec { filters: f, length: l }).collect();
            let shrink: usize = conv.iter().map(|c| c.length - 1).sum();
            prop_assume!(shrink < p);
            let cfg = CltfpConfig {
                locations: p,
                window: WindowConfig { recent, daily_half: dh, weekly_half: wh },
                conv: conv.clone(),
                short_hidden: hs,
                periodic_hidden: hp,
                l1_weight: 0.002,
            };
            let model = CltfpModel::build(cfg.clone(), seed).unwrap();
            let last_filters = conv.last().map_or(recent, |c| c.filters);
            let expect = (p - shrink) * last_filters + recent * hs + (2 * wh + 1) * hp + (2 * dh + 1) * hp;
            prop_assert_eq!(model.fusion.inputs(), expect);
            prop_assert_eq!(model.fusion.outputs(), p);
            let s = random_sample(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            let (pred, f) = model.forward(&s).unwrap();
            prop_assert_eq!(pred.len(), p);
            prop_assert_eq!(f.concat().len(), expect);
        }
    }
}

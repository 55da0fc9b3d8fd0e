//! Adamax, mini-batch training with early stopping, and the persistence baseline.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{NormStats, WindowedSample};
use crate::error::{Error, Result};
use crate::eval::MetricsReport;
use crate::model::CltfpModel;
use crate::params::Params;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config("batch_size, max_epochs and patience must be >= 1".into()));
        }
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !(self.learning_rate > 0.0 && unit(self.beta1) && unit(self.beta2) && self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "optimizer rates out of range: lr {}, beta1 {}, beta2 {}, eps {}",
                self.learning_rate, self.beta1, self.beta2, self.epsilon
            )));
        }
        Ok(())
    }
}

/// First moment `m` and infinity-norm accumulator `u` for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamaxState {
    pub m: Vec<Tensor>,
    pub u: Vec<Tensor>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamaxState {
    pub fn new<P: Params>(params: &P, cfg: &TrainConfig) -> Self {
        let zeros: Vec<Tensor> = params.params().iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        Self {
            m: zeros.clone(),
            u: zeros,
            step: 0,
            learning_rate: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
        }
    }

    /// One update of every parameter. Nothing changes if any gradient is non-finite.
    pub fn update<P: Params>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.params();
        let mut targets = params.params_mut();
        if grads.len() != targets.len() || targets.len() != self.m.len() {
            return Err(Error::State("optimizer state does not match the parameters".into()));
        }
        for ((name, g), (_, t)) in grads.iter().zip(&targets) {
            if g.shape() != t.shape() {
                return Err(Error::dim("adamax", t.shape(), g.shape()));
            }
            if !g.is_finite() {
                return Err(Error::Training {
                    epoch: 0,
                    message: format!("non-finite gradient for {name}"),
                });
            }
        }
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let rate = self.learning_rate / (1.0 - b1.powi(self.step as i32));
        for (k, (_, theta)) in targets.iter_mut().enumerate() {
            let g = grads[k].1.data();
            let m = self.m[k].data_mut();
            let u = self.u[k].data_mut();
            for (i, th) in theta.data_mut().iter_mut().enumerate() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                u[i] = (b2 * u[i]).max(g[i].abs());
                *th -= rate * m[i] / (u[i] + eps);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample training loss in normalized units.
    pub train_loss: f64,
    /// Mean squared error on denormalized validation predictions.
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl History {
    /// `epoch,train_loss,val_mse`
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,train_loss,val_mse")?;
        for r in &self.epochs {
            writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_mse)?;
        }
        Ok(())
    }

    pub fn best_val_mse(&self) -> Option<f64> {
        self.epochs.iter().find(|r| r.epoch == self.best_epoch).map(|r| r.val_mse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience counter over validation scores (lower is better).
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> StopDecision {
        if score < self.best {
            self.best = score;
            self.best_epoch = epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Denormalized `[samples x p]` predictions and actual flows.
pub fn forecast(model: &CltfpModel, samples: &[WindowedSample], stats: &NormStats) -> Result<(Tensor, Tensor)> {
    collect_rows(samples, |s| Ok((stats.denormalize(&model.predict(s)?)?, stats.denormalize(&s.target)?)))
}

fn collect_rows<F>(samples: &[WindowedSample], f: F) -> Result<(Tensor, Tensor)>
where
    F: Fn(&WindowedSample) -> Result<(Tensor, Tensor)> + Sync,
{
    if samples.is_empty() {
        return Err(Error::Domain("no samples to forecast".into()));
    }
    let p = samples[0].locations();
    let rows: Vec<Result<(Tensor, Tensor)>> = samples.par_iter().map(&f).collect();
    let mut pred = Vec::with_capacity(samples.len() * p);
    let mut actual = Vec::with_capacity(samples.len() * p);
    for r in rows {
        let (a, b) = r?;
        pred.extend_from_slice(a.data());
        actual.extend_from_slice(b.data());
    }
    Ok((Tensor::new(vec![samples.len(), p], pred)?, Tensor::new(vec![samples.len(), p], actual)?))
}

fn mse(pred: &Tensor, actual: &Tensor) -> f64 {
    let s: f64 = pred.data().iter().zip(actual.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    s / pred.len() as f64
}

pub fn validation_mse(model: &CltfpModel, samples: &[WindowedSample], stats: &NormStats) -> Result<f64> {
    let (pred, actual) = forecast(model, samples, stats)?;
    Ok(mse(&pred, &actual))
}

/// Trains on normalized samples and returns the parameters of the epoch
/// with the lowest validation MSE.
pub fn fit(
    mut model: CltfpModel,
    train: &[WindowedSample],
    val: &[WindowedSample],
    stats: &NormStats,
    cfg: &TrainConfig,
) -> Result<(CltfpModel, History)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Domain("training and validation sets must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamaxState::new(&model, cfg);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.param_set();
    let mut history = History::default();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<WindowedSample> = chunk.iter().map(|i| train[*i].clone()).collect();
            let (loss, grads) = model.batch_loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    message: format!("loss became {loss}"),
                });
            }
            opt.update(&mut model, &grads).map_err(|e| match e {
                Error::Training { message, .. } => Error::Training { epoch, message },
                other => other,
            })?;
            total += loss;
        }
        let val_mse = validation_mse(&model, val, stats)?;
        if !val_mse.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("validation MSE became {val_mse}"),
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            val_mse,
        };
        log::info!("epoch {epoch}: train loss {:.6}, val MSE {:.4}", record.train_loss, val_mse);
        history.epochs.push(record);
        match stopper.observe(epoch, val_mse) {
            StopDecision::Improved => best = model.param_set(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    model.load_param_set(&best)?;
    history.best_epoch = stopper.best_epoch();
    Ok((model, history))
}

/// Predicts each target as the most recent observed flow.
pub fn persistence_forecast(samples: &[WindowedSample], stats: &NormStats) -> Result<(Tensor, Tensor)> {
    collect_rows(samples, |s| {
        let last = Tensor::vector(s.recent.column(s.recent.cols() - 1));
        Ok((stats.denormalize(&last)?, stats.denormalize(&s.target)?))
    })
}

pub fn persistence_baseline(samples: &[WindowedSample], stats: &NormStats, mape_floor: f64) -> Result<MetricsReport> {
    let (pred, actual) = persistence_forecast(samples, stats)?;
    MetricsReport::compute(&pred, &actual, mape_floor)
}

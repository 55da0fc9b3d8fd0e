//! End-to-end steps shared by the CLI, the examples and the acceptance tests.

use std::io::Write;

use crate::config::RunConfig;
use crate::data::{make_windows, split_indices, NormStats, SplitIndices, TrafficSeries, WindowedSample};
use crate::error::{Error, Result};
use crate::eval::{ablation, AblationReport, LassoOptions, MetricsReport};
use crate::model::CltfpModel;
use crate::train::{fit, forecast, persistence_forecast, History};
use crate::tensor::Tensor;

/// Normalized samples of one series with their train/validation/test split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub series: TrafficSeries,
    pub samples: Vec<WindowedSample>,
    pub split: SplitIndices,
    pub stats: NormStats,
}

impl Dataset {
    /// Windows the series, splits the samples and fits z-score statistics on
    /// the steps up to the last training-pool target.
    pub fn prepare(series: TrafficSeries, cfg: &RunConfig) -> Result<Self> {
        Self::build(series, cfg, None)
    }

    /// Same as [`Dataset::prepare`] but with statistics restored from a checkpoint.
    pub fn with_stats(series: TrafficSeries, cfg: &RunConfig, stats: NormStats) -> Result<Self> {
        if stats.locations() != series.locations() {
            return Err(Error::Validation(format!(
                "checkpoint covers {} locations, data has {}",
                stats.locations(),
                series.locations()
            )));
        }
        Self::build(series, cfg, Some(stats))
    }

    fn build(series: TrafficSeries, cfg: &RunConfig, stats: Option<NormStats>) -> Result<Self> {
        let raw = make_windows(&series, &cfg.window)?;
        let split = split_indices(raw.len(), cfg.split.train_fraction, cfg.split.val_fraction, cfg.split.seed)?;
        let stats = match stats {
            Some(s) => s,
            None => {
                let pool_end = raw[split.test[0] - 1].t + 1;
                NormStats::fit(&series, pool_end)?
            }
        };
        let samples = raw.iter().map(|s| stats.normalize_sample(s)).collect::<Result<_>>()?;
        Ok(Self {
            series,
            samples,
            split,
            stats,
        })
    }

    pub fn pick(&self, idx: &[usize]) -> Vec<WindowedSample> {
        idx.iter().map(|&i| self.samples[i].clone()).collect()
    }

    pub fn train(&self) -> Vec<WindowedSample> {
        self.pick(&self.split.train)
    }

    pub fn val(&self) -> Vec<WindowedSample> {
        self.pick(&self.split.val)
    }

    pub fn test(&self) -> Vec<WindowedSample> {
        self.pick(&self.split.test)
    }
}

/// Builds a model from `cfg.init_seed` and trains it with early stopping.
pub fn train_model(data: &Dataset, cfg: &RunConfig) -> Result<(CltfpModel, History)> {
    cfg.validate()?;
    let model = CltfpModel::build(cfg.model_config(data.series.locations()), cfg.init_seed)?;
    fit(model, &data.train(), &data.val(), &data.stats, &cfg.train)
}

/// Test-set forecasts of the model and of the persistence baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cltfp: MetricsReport,
    pub persistence: MetricsReport,
    /// `[test samples x p]`, denormalized.
    pub predicted: Tensor,
    pub actual: Tensor,
    pub timestamps: Vec<i64>,
    pub sensor_ids: Vec<String>,
}

impl Evaluation {
    /// `model,mae,mape_pct,ace` with one row per forecaster.
    pub fn write_metrics_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        crate::eval::write_named_reports(
            out,
            "model",
            &[
                ("cltfp".to_string(), self.cltfp.clone()),
                ("persistence".to_string(), self.persistence.clone()),
            ],
        )
    }

    /// `t,sensor_id,predicted,actual`, one row per test step and sensor.
    pub fn write_predictions_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "sensor_id", "predicted", "actual"])?;
        for (row, ts) in self.timestamps.iter().enumerate() {
            let t = crate::data::format_timestamp(*ts);
            for (loc, id) in self.sensor_ids.iter().enumerate() {
                w.write_record([
                    t.as_str(),
                    id,
                    &self.predicted.at(row, loc).to_string(),
                    &self.actual.at(row, loc).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Validation(e.to_string()))?;
        Ok(())
    }
}

pub fn evaluate(model: &CltfpModel, data: &Dataset, mape_floor: f64) -> Result<Evaluation> {
    let test = data.test();
    let (predicted, actual) = forecast(model, &test, &data.stats)?;
    let (base_pred, base_actual) = persistence_forecast(&test, &data.stats)?;
    Ok(Evaluation {
        cltfp: MetricsReport::compute(&predicted, &actual, mape_floor)?,
        persistence: MetricsReport::compute(&base_pred, &base_actual, mape_floor)?,
        predicted,
        actual,
        timestamps: test.iter().map(|s| data.series.timestamp(s.t)).collect(),
        sensor_ids: data.series.sensor_ids().to_vec(),
    })
}

/// Lasso ablation over the trained model's branch features: fitted on the
/// training rows against z-scored targets, scored on the test rows in flows.
pub fn run_ablation(model: &CltfpModel, data: &Dataset, lambda: f64, mape_floor: f64) -> Result<AblationReport> {
    let features = model.extract_features(&data.samples, &data.stats)?;
    ablation(
        &features,
        &data.stats,
        &data.split.train,
        &data.split.test,
        lambda,
        mape_floor,
        &LassoOptions::default(),
    )
}

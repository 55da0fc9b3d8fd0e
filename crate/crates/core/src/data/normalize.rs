use serde::{Deserialize, Serialize};

use super::{TrafficSeries, WindowedSample};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Per-location z-score statistics, fitted on a training prefix only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Fits on steps `0 .. train_end` of every location. A constant location
    /// gets `std = 1`.
    pub fn fit(series: &TrafficSeries, train_end: usize) -> Result<Self> {
        if train_end == 0 || train_end > series.steps() {
            return Err(Error::Domain(format!(
                "normalization range 0..{train_end} is outside 0..{}",
                series.steps()
            )));
        }
        let (mean, std) = (0..series.locations())
            .map(|loc| {
                let row = &series.values().row(loc)[..train_end];
                let n = row.len() as f64;
                let mean = row.iter().sum::<f64>() / n;
                let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                (mean, if std > 1e-12 { std } else { 1.0 })
            })
            .unzip();
        Ok(Self { mean, std })
    }

    pub fn locations(&self) -> usize {
        self.mean.len()
    }

    /// Normalizes a `[p x k]` matrix or a `[p]` vector, row `i` with location `i`.
    pub fn normalize(&self, values: &Tensor) -> Result<Tensor> {
        self.apply(values, |v, m, s| (v - m) / s)
    }

    pub fn denormalize(&self, values: &Tensor) -> Result<Tensor> {
        self.apply(values, |v, m, s| v * s + m)
    }

    pub fn normalize_sample(&self, sample: &WindowedSample) -> Result<WindowedSample> {
        Ok(WindowedSample {
            t: sample.t,
            recent: self.normalize(&sample.recent)?,
            daily: self.normalize(&sample.daily)?,
            weekly: self.normalize(&sample.weekly)?,
            target: self.normalize(&sample.target)?,
        })
    }

    fn apply(&self, values: &Tensor, f: impl Fn(f64, f64, f64) -> f64) -> Result<Tensor> {
        if values.rows() != self.locations() {
            return Err(Error::dim("normalize", values.shape(), &[self.locations()]));
        }
        let cols = values.cols();
        let mut out = values.clone();
        for (loc, row) in out.data_mut().chunks_exact_mut(cols).enumerate() {
            for v in row {
                *v = f(*v, self.mean[loc], self.std[loc]);
            }
        }
        Ok(out)
    }
}

//! Sensor series, sliding-window samples, normalization and splits.

mod csv_io;
mod normalize;
mod split;
mod synthetic;
mod windows;

pub use csv_io::{format_timestamp, load_csv, parse_timestamp, write_csv};
pub use normalize::NormStats;
pub use split::{split, split_indices, Split, SplitIndices};
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use windows::{make_windows, WindowConfig, WindowedSample};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// `p` locations by `T` evenly spaced time steps of non-negative flow counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSeries {
    values: Tensor,
    sensor_ids: Vec<String>,
    start: i64,
    interval_secs: i64,
}

impl TrafficSeries {
    /// `values` is `[locations x steps]`; `start` is epoch seconds.
    pub fn new(
        values: Tensor,
        sensor_ids: Vec<String>,
        start: i64,
        interval_secs: i64,
    ) -> Result<Self> {
        if values.shape().len() != 2 || values.rows() != sensor_ids.len() {
            return Err(Error::dim(
                "traffic series",
                values.shape(),
                &[sensor_ids.len()],
            ));
        }
        if interval_secs <= 0 || SECONDS_PER_DAY % interval_secs != 0 {
            return Err(Error::Validation(format!(
                "interval of {interval_secs}s does not divide a day"
            )));
        }
        let cols = values.cols();
        if let Some((idx, v)) = values
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Validation(format!(
                "flow {v} for sensor {} at step {} is not a non-negative number",
                sensor_ids[idx / cols],
                idx % cols
            )));
        }
        Ok(Self {
            values,
            sensor_ids,
            start,
            interval_secs,
        })
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn sensor_ids(&self) -> &[String] {
        &self.sensor_ids
    }

    pub fn locations(&self) -> usize {
        self.values.rows()
    }

    pub fn steps(&self) -> usize {
        self.values.cols()
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn interval_secs(&self) -> i64 {
        self.interval_secs
    }

    pub fn steps_per_day(&self) -> usize {
        (SECONDS_PER_DAY / self.interval_secs) as usize
    }

    pub fn steps_per_week(&self) -> usize {
        7 * self.steps_per_day()
    }

    pub fn timestamp(&self, step: usize) -> i64 {
        self.start + step as i64 * self.interval_secs
    }

    pub fn at(&self, location: usize, step: usize) -> f64 {
        self.values.at(location, step)
    }
}

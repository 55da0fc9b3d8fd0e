use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrafficSeries;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Sliding-window geometry. The forecast horizon is always one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    /// Recent steps `t-n .. t-1`.
    pub recent: usize,
    /// Half-width of the window around the same time yesterday.
    pub daily_half: usize,
    /// Half-width of the window around the same time last week.
    pub weekly_half: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            recent: 15,
            daily_half: 6,
            weekly_half: 6,
        }
    }
}

impl WindowConfig {
    pub const HORIZON: usize = 1;

    pub fn daily_len(&self) -> usize {
        2 * self.daily_half + 1
    }

    pub fn weekly_len(&self) -> usize {
        2 * self.weekly_half + 1
    }

    /// Earliest target index with a complete set of windows.
    pub fn first_target(&self, steps_per_day: usize) -> usize {
        self.recent.max(7 * steps_per_day + self.weekly_half)
    }

    pub fn validate(&self, steps_per_day: usize) -> Result<()> {
        if self.recent == 0 {
            return Err(Error::Config("recent window must be at least 1".into()));
        }
        // The periodic windows look past their centres; they must stay behind t.
        if self.daily_half >= steps_per_day {
            return Err(Error::Config(format!(
                "daily half-window {} must be shorter than a day ({steps_per_day} steps)",
                self.daily_half
            )));
        }
        if self.weekly_half >= 7 * steps_per_day {
            return Err(Error::Config(format!(
                "weekly half-window {} must be shorter than a week",
                self.weekly_half
            )));
        }
        Ok(())
    }
}

/// One training example cut around target index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    pub t: usize,
    /// `[p x n]`, columns `t-n .. t-1`.
    pub recent: Tensor,
    /// `[p x (2 n_d + 1)]`, centred on `t - D`.
    pub daily: Tensor,
    /// `[p x (2 n_w + 1)]`, centred on `t - 7D`.
    pub weekly: Tensor,
    /// `[p]`, flows at `t`.
    pub target: Tensor,
}

impl WindowedSample {
    pub fn locations(&self) -> usize {
        self.target.len()
    }

    /// Column `q` of a `[p x k]` window as a vector over locations.
    pub fn column(window: &Tensor, q: usize) -> Tensor {
        Tensor::vector(window.column(q))
    }

    pub fn recent_columns(&self) -> Vec<Tensor> {
        (0..self.recent.cols()).map(|q| Self::column(&self.recent, q)).collect()
    }

    pub fn daily_columns(&self) -> Vec<Tensor> {
        (0..self.daily.cols()).map(|q| Self::column(&self.daily, q)).collect()
    }

    pub fn weekly_columns(&self) -> Vec<Tensor> {
        (0..self.weekly.cols()).map(|q| Self::column(&self.weekly, q)).collect()
    }
}

/// Cuts one sample per target index from `first_target` to `T-1`, in time order.
pub fn make_windows(series: &TrafficSeries, cfg: &WindowConfig) -> Result<Vec<WindowedSample>> {
    let d = series.steps_per_day();
    cfg.validate(d)?;
    let first = cfg.first_target(d);
    let steps = series.steps();
    if steps <= first {
        return Err(Error::Domain(format!(
            "series has {steps} steps; at least {} are needed for one sample",
            first + 1
        )));
    }
    let values = series.values();
    let p = series.locations();
    let cut = |from: usize, len: usize| -> Tensor {
        let mut out = Tensor::zeros(&[p, len]);
        for loc in 0..p {
            let row = values.row(loc);
            out.data_mut()[loc * len..(loc + 1) * len].copy_from_slice(&row[from..from + len]);
        }
        out
    };
    Ok((first..steps)
        .into_par_iter()
        .map(|t| WindowedSample {
            t,
            recent: cut(t - cfg.recent, cfg.recent),
            daily: cut(t - d - cfg.daily_half, cfg.daily_len()),
            weekly: cut(t - 7 * d - cfg.weekly_half, cfg.weekly_len()),
            target: Tensor::vector(values.column(t)),
        })
        .collect())
}

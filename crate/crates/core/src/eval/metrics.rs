use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Actual flows below this (vehicles per interval) are left out of MAPE.
pub const DEFAULT_MAPE_FLOOR: f64 = 1.0;

/// Scores over a `[steps x locations]` prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub mape_pct: f64,
    /// Mean per-step Pearson correlation across locations; higher is better.
    pub ace: f64,
    pub n_predictions: usize,
    pub n_steps: usize,
    /// Steps left out of ACE because one side had zero spread.
    pub ace_skipped: usize,
}

impl MetricsReport {
    pub fn compute(pred: &Tensor, actual: &Tensor, mape_floor: f64) -> Result<Self> {
        let (ace, skipped) = ace_with_skips(pred, actual)?;
        Ok(Self {
            mae: mae(pred, actual)?,
            mape_pct: mape(pred, actual, mape_floor)?,
            ace,
            n_predictions: pred.len(),
            n_steps: pred.rows(),
            ace_skipped: skipped,
        })
    }

    pub const CSV_HEADER: &'static str = "mae,mape_pct,ace";

    pub fn csv_fields(&self) -> String {
        format!("{},{},{}", self.mae, self.mape_pct, self.ace)
    }
}

fn check(pred: &Tensor, actual: &Tensor, op: &'static str) -> Result<()> {
    if pred.shape() != actual.shape() {
        return Err(Error::dim(op, pred.shape(), actual.shape()));
    }
    if pred.is_empty() {
        return Err(Error::Domain(format!("{op} over an empty prediction set")));
    }
    Ok(())
}

pub fn mae(pred: &Tensor, actual: &Tensor) -> Result<f64> {
    check(pred, actual, "mae")?;
    let mut acc = 0.0;
    for (z, n) in pred.data().iter().zip(actual.data()) {
        acc += (z - n).abs();
    }
    Ok(acc / pred.len() as f64)
}

/// Percent error averaged over entries whose actual value is at least `floor`.
pub fn mape(pred: &Tensor, actual: &Tensor, floor: f64) -> Result<f64> {
    check(pred, actual, "mape")?;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (z, n) in pred.data().iter().zip(actual.data()) {
        if *n >= floor {
            acc += (z - n).abs() / n;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Domain(format!("every actual value is below the MAPE floor {floor}")));
    }
    Ok(100.0 * acc / count as f64)
}

pub fn ace(pred: &Tensor, actual: &Tensor) -> Result<f64> {
    ace_with_skips(pred, actual).map(|(v, _)| v)
}

/// ACE plus the number of steps skipped for zero variance.
pub fn ace_with_skips(pred: &Tensor, actual: &Tensor) -> Result<(f64, usize)> {
    check(pred, actual, "ace")?;
    if pred.shape().len() != 2 || pred.cols() < 2 {
        return Err(Error::Domain(
            "ACE needs a [steps x locations] matrix with at least two locations".into(),
        ));
    }
    let mut acc = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for step in 0..pred.rows() {
        match pearson(pred.row(step), actual.row(step)) {
            Some(r) => {
                acc += r;
                used += 1;
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("ACE skipped {skipped} of {} steps with zero variance", pred.rows());
    }
    if used == 0 {
        return Err(Error::Domain("ACE undefined: every step has zero variance".into()));
    }
    Ok((acc / used as f64, skipped))
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let flat = |ss: f64, v: &[f64]| {
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        ss <= n * (1e-12 * scale).powi(2)
    };
    if flat(saa, a) || flat(sbb, b) {
        return None;
    }
    // sqrt of the product keeps self-correlation exactly 1.
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Writes `model,mae,mape_pct,ace` rows.
pub(crate) fn write_named_reports<W: Write>(
    mut out: W,
    first_column: &str,
    rows: &[(String, MetricsReport)],
) -> std::io::Result<()> {
    writeln!(out, "{first_column},{}", MetricsReport::CSV_HEADER)?;
    for (name, r) in rows {
        writeln!(out, "{name},{}", r.csv_fields())?;
    }
    Ok(())
}

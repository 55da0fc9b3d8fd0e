use std::fmt;
use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use super::lasso::{lasso_fit_with, LassoOptions};
use super::metrics::MetricsReport;
use crate::error::{Error, Result};
use crate::data::NormStats;
use crate::model::{FeatureBlocks, FeatureMatrix};
use crate::tensor::Tensor;

/// A subset of the spatial (S), short-term (T) and periodic (P) feature blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Combo {
    S,
    T,
    P,
    PT,
    ST,
    SP,
    STP,
}

impl Combo {
    /// Report row order.
    pub const ALL: [Combo; 7] = [Combo::S, Combo::T, Combo::P, Combo::PT, Combo::ST, Combo::SP, Combo::STP];

    pub fn label(self) -> &'static str {
        match self {
            Combo::S => "S",
            Combo::T => "T",
            Combo::P => "P",
            Combo::PT => "P+T",
            Combo::ST => "S+T",
            Combo::SP => "S+P",
            Combo::STP => "S+T+P",
        }
    }

    /// (spatial, short-term, periodic) membership.
    pub fn members(self) -> (bool, bool, bool) {
        match self {
            Combo::S => (true, false, false),
            Combo::T => (false, true, false),
            Combo::P => (false, false, true),
            Combo::PT => (false, true, true),
            Combo::ST => (true, true, false),
            Combo::SP => (true, false, true),
            Combo::STP => (true, true, true),
        }
    }

    pub fn columns(self, blocks: &FeatureBlocks) -> Vec<usize> {
        let (s, t, p) = self.members();
        let mut cols = Vec::new();
        let mut take = |on: bool, r: Range<usize>| {
            if on {
                cols.extend(r);
            }
        };
        take(s, blocks.spatial.clone());
        take(t, blocks.short_term.clone());
        take(p, blocks.periodic());
        cols
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub combo: Combo,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub lambda: f64,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn get(&self, combo: Combo) -> &MetricsReport {
        &self.rows.iter().find(|r| r.combo == combo).expect("every combo is present").metrics
    }

    pub fn mae(&self, combo: Combo) -> f64 {
        self.get(combo).mae
    }

    /// `combo,mae,mape_pct,ace`
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let rows: Vec<_> = self.rows.iter().map(|r| (r.combo.label().to_string(), r.metrics.clone())).collect();
        super::metrics::write_named_reports(out, "combo", &rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

fn check_blocks(blocks: &FeatureBlocks, width: usize) -> Result<()> {
    let chain = [&blocks.spatial, &blocks.short_term, &blocks.weekly, &blocks.daily];
    let contiguous = chain.windows(2).all(|w| w[0].end == w[1].start);
    if blocks.spatial.start != 0 || !contiguous || blocks.daily.end != width || chain.iter().any(|r| r.is_empty()) {
        return Err(Error::Domain(format!(
            "feature blocks {blocks:?} do not partition {width} columns"
        )));
    }
    Ok(())
}

fn select(x: &Tensor, rows: &[usize], cols: &[usize]) -> Tensor {
    let mut out = Tensor::zeros(&[rows.len(), cols.len()]);
    for (i, r) in rows.iter().enumerate() {
        let src = x.row(*r);
        for (j, c) in cols.iter().enumerate() {
            out.set(i, j, src[*c]);
        }
    }
    out
}

/// Column `j` of a `[rows x p]` matrix is location `j`.
fn zscore(y: &Tensor, stats: &NormStats) -> Tensor {
    let mut out = y.clone();
    let p = y.cols();
    for (k, v) in out.data_mut().iter_mut().enumerate() {
        *v = (*v - stats.mean[k % p]) / stats.std[k % p];
    }
    out
}

fn unscale(y: &Tensor, stats: &NormStats) -> Tensor {
    let mut out = y.clone();
    let p = y.cols();
    for (k, v) in out.data_mut().iter_mut().enumerate() {
        *v = *v * stats.std[k % p] + stats.mean[k % p];
    }
    out
}

fn take_rows(x: &Tensor, rows: &[usize]) -> Tensor {
    let all: Vec<usize> = (0..x.cols()).collect();
    select(x, rows, &all)
}

/// Fits one Lasso per feature-block combination on `train_rows` and scores
/// it on `test_rows`. Targets are z-scored with `stats` for the fit and
/// predictions mapped back to flows before scoring.
pub fn ablation(
    features: &FeatureMatrix,
    stats: &NormStats,
    train_rows: &[usize],
    test_rows: &[usize],
    lambda: f64,
    mape_floor: f64,
    opts: &LassoOptions,
) -> Result<AblationReport> {
    let x = &features.features;
    check_blocks(&features.blocks, x.cols())?;
    if x.rows() != features.targets.rows() {
        return Err(Error::dim("ablation", x.shape(), features.targets.shape()));
    }
    if let Some(r) = train_rows.iter().chain(test_rows).find(|r| **r >= x.rows()) {
        return Err(Error::Domain(format!("row {r} out of range for {} samples", x.rows())));
    }
    if test_rows.is_empty() {
        return Err(Error::Domain("ablation needs held-out rows".into()));
    }
    if stats.locations() != features.targets.cols() {
        return Err(Error::dim("ablation targets", features.targets.shape(), &[x.rows(), stats.locations()]));
    }
    let y_train = zscore(&take_rows(&features.targets, train_rows), stats);
    let y_test = take_rows(&features.targets, test_rows);

    let rows: Vec<Result<AblationRow>> = Combo::ALL
        .par_iter()
        .map(|combo| {
            let cols = combo.columns(&features.blocks);
            let fit = lasso_fit_with(&select(x, train_rows, &cols), &y_train, lambda, opts)?;
            let pred = unscale(&fit.predict(&select(x, test_rows, &cols))?, stats);
            Ok(AblationRow {
                combo: *combo,
                metrics: MetricsReport::compute(&pred, &y_test, mape_floor)?,
            })
        })
        .collect();
    Ok(AblationReport {
        lambda,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::lasso::lasso_fit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stats() -> NormStats {
        NormStats {
            mean: vec![50.0, 48.0],
            std: vec![12.0, 15.0],
        }
    }

    fn blocks() -> FeatureBlocks {
        FeatureBlocks {
            spatial: 0..3,
            short_term: 3..5,
            weekly: 5..6,
            daily: 6..8,
        }
    }

    /// Targets driven by every block, so more blocks should never hurt much.
    fn planted(seed: u64, m: usize) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor::matrix(m, 8, (0..m * 8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mut y = Tensor::zeros(&[m, 2]);
        for i in 0..m {
            let r = x.row(i);
            let base = 50.0 + 10.0 * r[0] + 8.0 * r[3] + 6.0 * r[6];
            y.set(i, 0, base + rng.random_range(-0.5..0.5));
            y.set(i, 1, base + 5.0 * r[5] + rng.random_range(-0.5..0.5));
        }
        FeatureMatrix {
            features: x,
            targets: y,
            blocks: blocks(),
        }
    }

    #[test]
    fn seven_rows_in_report_order() {
        let f = planted(1, 120);
        let train: Vec<usize> = (0..90).collect();
        let test: Vec<usize> = (90..120).collect();
        let rep = ablation(&f, &stats(), &train, &test, 0.002, 1.0, &LassoOptions::default()).unwrap();
        let labels: Vec<_> = rep.rows.iter().map(|r| r.combo.label()).collect();
        assert_eq!(labels, ["S", "T", "P", "P+T", "S+T", "S+P", "S+T+P"]);
        let csv = rep.to_csv_string();
        assert!(csv.starts_with("combo,mae,mape_pct,ace\nS,"));
        assert_eq!(csv.lines().count(), 8);
        let full = rep.mae(Combo::STP);
        for c in [Combo::S, Combo::T, Combo::P, Combo::ST] {
            assert!(full <= rep.mae(c), "{c}");
        }
    }

    #[test]
    fn full_combo_equals_direct_fit() {
        let f = planted(2, 80);
        let train: Vec<usize> = (0..60).collect();
        let test: Vec<usize> = (60..80).collect();
        let rep = ablation(&f, &stats(), &train, &test, 0.01, 1.0, &LassoOptions::default()).unwrap();
        let y = zscore(&take_rows(&f.targets, &train), &stats());
        let fit = lasso_fit(&take_rows(&f.features, &train), &y, 0.01).unwrap();
        let pred = unscale(&fit.predict(&take_rows(&f.features, &test)).unwrap(), &stats());
        let direct = MetricsReport::compute(&pred, &take_rows(&f.targets, &test), 1.0).unwrap();
        assert_eq!(rep.get(Combo::STP), &direct);
    }

    #[test]
    fn zscore_round_trip() {
        let y = Tensor::from_rows(&[vec![62.0, 33.0], vec![50.0, 48.0]]).unwrap();
        let z = zscore(&y, &stats());
        assert_eq!(z.data(), &[1.0, -1.0, 0.0, 0.0]);
        assert_eq!(unscale(&z, &stats()), y);
    }

    #[test]
    fn periodic_combines_weekly_and_daily() {
        assert_eq!(Combo::P.columns(&blocks()), vec![5, 6, 7]);
        assert_eq!(Combo::SP.columns(&blocks()), vec![0, 1, 2, 5, 6, 7]);
    }

    #[test]
    fn mismatched_blocks_rejected() {
        let mut f = planted(3, 20);
        f.blocks.daily = 6..9;
        let rows: Vec<usize> = (0..20).collect();
        assert!(matches!(
            ablation(&f, &stats(), &rows, &rows, 0.1, 1.0, &LassoOptions::default()),
            Err(Error::Domain(_))
        ));
        f.blocks = FeatureBlocks {
            spatial: 0..3,
            short_term: 4..5,
            weekly: 5..6,
            daily: 6..8,
        };
        assert!(ablation(&f, &stats(), &rows, &rows, 0.1, 1.0, &LassoOptions::default()).is_err());
    }
}

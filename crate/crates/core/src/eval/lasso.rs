use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Largest allowed KKT violation, in the standardized objective.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Record the objective after every sweep.
    pub track_objective: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_sweeps: 100_000,
            track_objective: false,
        }
    }
}

/// Independent Lasso fits, one per target column.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub lambda: f64,
    /// `[outputs x d]` on the original feature scale.
    pub weights: Tensor,
    pub intercept: Vec<f64>,
    /// `[outputs x d]` on the standardized feature scale; dropped columns stay 0.
    pub standardized_weights: Tensor,
    pub feature_mean: Vec<f64>,
    /// Population standard deviation; 0 marks a dropped constant column.
    pub feature_std: Vec<f64>,
    pub converged: bool,
    /// Worst KKT violation over all outputs.
    pub kkt_residual: f64,
    pub sweeps: Vec<usize>,
    /// Per output, objective after each sweep (empty unless tracked).
    pub objective: Vec<Vec<f64>>,
}

impl LassoFit {
    pub fn outputs(&self) -> usize {
        self.intercept.len()
    }

    /// `[m x d]` features to `[m x outputs]` predictions.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let d = self.feature_mean.len();
        if x.shape().len() != 2 || x.cols() != d {
            return Err(Error::dim("lasso predict", x.shape(), &[x.rows(), d]));
        }
        let k = self.outputs();
        let mut out = Tensor::zeros(&[x.rows(), k]);
        for i in 0..x.rows() {
            let row = x.row(i);
            for j in 0..k {
                let w = self.weights.row(j);
                let v = self.intercept[j] + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                out.set(i, j, v);
            }
        }
        Ok(out)
    }
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

pub fn lasso_fit(x: &Tensor, y: &Tensor, lambda: f64) -> Result<LassoFit> {
    lasso_fit_with(x, y, lambda, &LassoOptions::default())
}

/// Minimizes `(1/2m)|y_j - Xw - c|^2 + lambda |w|_1` per output by cyclic
/// coordinate descent on standardized columns.
pub fn lasso_fit_with(x: &Tensor, y: &Tensor, lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
    if x.shape().len() != 2 || y.shape().len() != 2 || x.rows() != y.rows() {
        return Err(Error::dim("lasso_fit", x.shape(), y.shape()));
    }
    let (m, d) = (x.rows(), x.cols());
    if m < 2 {
        return Err(Error::Domain(format!("lasso needs at least 2 rows, got {m}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda {lambda} must be finite and >= 0")));
    }
    let mf = m as f64;

    let Standardized { mean, std, cols } = standardize(x);
    let norms: Vec<f64> = cols.iter().map(|(_, c)| c.iter().map(|v| v * v).sum::<f64>() / mf).collect();

    let fits: Vec<Result<OutputFit>> = (0..y.cols())
        .into_par_iter()
        .map(|k| fit_one(&cols, &norms, &y.column(k), lambda, opts))
        .collect();

    let k = y.cols();
    let mut weights = Tensor::zeros(&[k, d]);
    let mut std_weights = Tensor::zeros(&[k, d]);
    let mut intercept = vec![0.0; k];
    let mut kkt: f64 = 0.0;
    let mut sweeps = Vec::with_capacity(k);
    let mut objective = Vec::with_capacity(k);
    for (out, fit) in fits.into_iter().enumerate() {
        let fit = fit?;
        let mut c = fit.y_mean;
        for ((j, _), w) in cols.iter().zip(&fit.w) {
            std_weights.set(out, *j, *w);
            let orig = w / std[*j];
            weights.set(out, *j, orig);
            c -= orig * mean[*j];
        }
        intercept[out] = c;
        kkt = kkt.max(fit.kkt);
        sweeps.push(fit.sweeps);
        objective.push(fit.objective);
    }
    Ok(LassoFit {
        lambda,
        weights,
        intercept,
        standardized_weights: std_weights,
        feature_mean: mean,
        feature_std: std,
        converged: true,
        kkt_residual: kkt,
        sweeps,
        objective,
    })
}

struct OutputFit {
    w: Vec<f64>,
    y_mean: f64,
    kkt: f64,
    sweeps: usize,
    objective: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Population-std standardization; near-constant columns are dropped.
struct Standardized {
    mean: Vec<f64>,
    std: Vec<f64>,
    cols: Vec<(usize, Vec<f64>)>,
}

fn standardize(x: &Tensor) -> Standardized {
    let (m, d) = (x.rows(), x.cols());
    let mf = m as f64;
    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    let mut cols = Vec::new();
    for j in 0..d {
        let col = x.column(j);
        let mu = col.iter().sum::<f64>() / mf;
        let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / mf;
        mean[j] = mu;
        let scale = col.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if var.sqrt() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            continue;
        }
        let s = var.sqrt();
        std[j] = s;
        cols.push((j, col.iter().map(|v| (v - mu) / s).collect()));
    }
    Standardized { mean, std, cols }
}

fn centred(y: &[f64]) -> (f64, Vec<f64>) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (mean, y.iter().map(|v| v - mean).collect())
}

/// Smallest penalty at which every weight of every output is exactly zero.
///
/// Computed with the same arithmetic as the solver's first coordinate
/// gradients, so `lasso_fit(x, y, lasso_lambda_max(x, y)?)` returns zeros.
pub fn lasso_lambda_max(x: &Tensor, y: &Tensor) -> Result<f64> {
    if x.shape().len() != 2 || y.shape().len() != 2 || x.rows() != y.rows() || x.rows() == 0 {
        return Err(Error::dim("lasso_lambda_max", x.shape(), y.shape()));
    }
    let mf = x.rows() as f64;
    let cols = standardize(x).cols;
    let mut best = 0.0_f64;
    for k in 0..y.cols() {
        let (_, r) = centred(&y.column(k));
        for (_, col) in &cols {
            best = best.max((dot(col, &r) / mf).abs());
        }
    }
    Ok(best)
}

fn fit_one(
    cols: &[(usize, Vec<f64>)],
    norms: &[f64],
    y: &[f64],
    lambda: f64,
    opts: &LassoOptions,
) -> Result<OutputFit> {
    let mf = y.len() as f64;
    let (y_mean, mut r) = centred(y);
    let mut w = vec![0.0; cols.len()];
    let mut objective = Vec::new();
    let objective_of = |r: &[f64], w: &[f64]| {
        dot(r, r) / (2.0 * mf) + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    };

    let mut kkt = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        for (j, (_, col)) in cols.iter().enumerate() {
            let g = dot(col, &r) / mf;
            let new = soft_threshold(norms[j] * w[j] + g, lambda) / norms[j];
            let delta = new - w[j];
            if delta != 0.0 {
                for (ri, xi) in r.iter_mut().zip(col) {
                    *ri -= delta * xi;
                }
                w[j] = new;
            }
        }
        if opts.track_objective {
            objective.push(objective_of(&r, &w));
        }
        kkt = kkt_residual(cols, &r, &w, lambda);
        if kkt <= opts.tol {
            return Ok(OutputFit {
                w,
                y_mean,
                kkt,
                sweeps: sweep,
                objective,
            });
        }
    }
    Err(Error::Fit {
        sweeps: opts.max_sweeps,
        residual: kkt,
    })
}

fn kkt_residual(cols: &[(usize, Vec<f64>)], r: &[f64], w: &[f64], lambda: f64) -> f64 {
    let mf = r.len() as f64;
    cols.iter()
        .zip(w)
        .map(|((_, col), wj)| {
            let g = dot(col, r) / mf;
            if *wj == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * wj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

//! Forecast metrics, Lasso regression and the feature-block ablation.

mod ablation;
mod lasso;
mod metrics;

pub use ablation::{ablation, AblationReport, AblationRow, Combo};
pub use lasso::{lasso_fit, lasso_fit_with, lasso_lambda_max, soft_threshold, LassoFit, LassoOptions};
pub use metrics::{ace, ace_with_skips, mae, mape, MetricsReport, DEFAULT_MAPE_FLOOR};
pub(crate) use metrics::write_named_reports;

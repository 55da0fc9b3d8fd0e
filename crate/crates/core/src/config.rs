//! Run-level settings: everything `train`, `evaluate` and `ablate` need to
//! reproduce a run bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::WindowConfig;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_MAPE_FLOOR;
use crate::model::{CltfpConfig, ConvSpec};
use crate::train::TrainConfig;

/// Architecture settings that do not depend on the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    pub conv: Vec<ConvSpec>,
    pub short_hidden: usize,
    pub periodic_hidden: usize,
    pub l1_weight: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let full = CltfpConfig::full_size(1);
        Self {
            conv: full.conv,
            short_hidden: full.short_hidden,
            periodic_hidden: full.periodic_hidden,
            l1_weight: full.l1_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Leading share of samples used for training and validation; the rest is test.
    pub train_fraction: f64,
    /// Share of that leading pool held out for early stopping.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub window: WindowConfig,
    pub model: ModelSettings,
    /// `train.seed` drives the epoch shuffle.
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub init_seed: u64,
    pub mape_floor: f64,
    pub lasso_lambda: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            model: ModelSettings::default(),
            train: TrainConfig::default(),
            split: SplitConfig::default(),
            init_seed: 0,
            mape_floor: DEFAULT_MAPE_FLOOR,
            lasso_lambda: 0.002,
        }
    }
}

impl RunConfig {
    /// Paper windows and optimizer, with a narrow network (10 filters per conv
    /// layer, hidden sizes 8 and 5) sized for a few hundred training samples.
    pub fn desk() -> Self {
        Self {
            model: ModelSettings {
                conv: vec![
                    ConvSpec { filters: 10, length: 3 },
                    ConvSpec { filters: 10, length: 3 },
                    ConvSpec { filters: 10, length: 2 },
                ],
                short_hidden: 8,
                periodic_hidden: 5,
                l1_weight: 0.002,
            },
            ..Self::default()
        }
    }

    /// Uses `seed` for initialization, shuffling and the split.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init_seed = seed;
        self.train.seed = seed;
        self.split.seed = seed;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn model_config(&self, locations: usize) -> CltfpConfig {
        CltfpConfig {
            locations,
            window: self.window,
            conv: self.model.conv.clone(),
            short_hidden: self.model.short_hidden,
            periodic_hidden: self.model.periodic_hidden,
            l1_weight: self.model.l1_weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.mape_floor.is_finite() && self.mape_floor >= 0.0) {
            return Err(Error::Config(format!("mape_floor {} must be >= 0", self.mape_floor)));
        }
        if !(self.lasso_lambda.is_finite() && self.lasso_lambda >= 0.0) {
            return Err(Error::Config(format!("lasso_lambda {} must be >= 0", self.lasso_lambda)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_full_size() {
        let c = RunConfig::default();
        assert_eq!(c.model_config(33), CltfpConfig::full_size(33));
        assert_eq!(c.lasso_lambda, 0.002);
        assert_eq!((c.train.batch_size, c.train.max_epochs, c.train.patience), (32, 50, 5));
    }

    #[test]
    fn desk_fusion_width() {
        assert_eq!(RunConfig::desk().model_config(8).fusion_width().unwrap(), 30 + 120 + 65 + 65);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = RunConfig::from_json(r#"{"window": {"recent": 4}, "train": {"max_epochs": 3}}"#).unwrap();
        assert_eq!(c.window.recent, 4);
        assert_eq!(c.window.daily_half, 6);
        assert_eq!(c.train.max_epochs, 3);
        assert_eq!(c.train.learning_rate, 0.002);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"epochs": 3}"#), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"train": {"lr": 0.1}}"#).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }
}

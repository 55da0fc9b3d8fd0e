//! Single-file JSON checkpoints with base64 little-endian f64 parameter data.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::model::{CltfpConfig, CltfpModel};
use crate::params::Params;
use crate::tensor::Tensor;

pub const FORMAT: &str = "cltfp-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredTensor {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major f64 values, little-endian, base64.
    pub data: String,
}

impl StoredTensor {
    pub fn encode(name: &str, t: &Tensor) -> Self {
        let bytes: Vec<u8> = t.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        Self {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            data: STANDARD.encode(bytes),
        }
    }

    pub fn decode(&self) -> Result<Tensor> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::State(format!("parameter {}: {e}", self.name)))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::State(format!("parameter {}: truncated data", self.name)));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Tensor::new(self.shape.clone(), values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub run: RunConfig,
    pub model: CltfpConfig,
    pub sensor_ids: Vec<String>,
    pub norm: NormStats,
    pub params: Vec<StoredTensor>,
}

impl Checkpoint {
    pub fn new(run: &RunConfig, model: &CltfpModel, sensor_ids: &[String], norm: &NormStats) -> Self {
        Self {
            format: FORMAT.to_string(),
            run: run.clone(),
            model: model.config.clone(),
            sensor_ids: sensor_ids.to_vec(),
            norm: norm.clone(),
            params: model.params().iter().map(|(n, t)| StoredTensor::encode(n, t)).collect(),
        }
    }

    /// Rebuilds the model; every stored tensor must match the configured layout.
    pub fn model(&self) -> Result<CltfpModel> {
        let mut model = CltfpModel::build(self.model.clone(), 0)?;
        let set = self
            .params
            .iter()
            .map(|p| Ok((p.name.clone(), p.decode()?)))
            .collect::<Result<crate::params::ParamSet>>()?;
        model.load_param_set(&set)?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.format != FORMAT {
            return Err(Error::State(format!("unsupported checkpoint format `{}`", c.format)));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

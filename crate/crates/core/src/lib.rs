//! Convolutional-LSTM traffic flow forecaster built from scratch on a small
//! dense tensor type, with metrics and a Lasso feature-block ablation.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod params;
pub mod pipeline;
pub mod plot;
pub mod tensor;
pub mod train;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{Error, Result};
pub use model::{CltfpConfig, CltfpModel};
pub use params::{ParamSet, Params};
pub use tensor::{Reduce, Tensor};

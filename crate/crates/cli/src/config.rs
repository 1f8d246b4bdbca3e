//! Run configuration file. Every section is optional and falls back to the
//! library defaults; the layout is published in `schema/config.schema.json`.

use std::path::Path;

use anyhow::{Context, Result};
use honor_core::evaluation::{ClassifyConfig, ClusterConfig};
use honor_core::hsbm::HsbmConfig;
use honor_core::lab::LabConfig;
use honor_core::{GradCheckConfig, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub classify: ClassifyConfig,
    pub cluster: ClusterConfig,
    pub hsbm: HsbmConfig,
    pub lab: LabConfig,
    pub gradcheck: GradCheckConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("config {} does not match the schema", path.display()))
    }
}

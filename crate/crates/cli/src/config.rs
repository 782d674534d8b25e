use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wingforge::{Atmosphere, MeshResolution, ParameterSpace, SurrogateRef};
use wingforge_service::ServiceConfig;

use crate::error::{Classify, CliResult};

/// Defaults read from `--config`; every field can be overridden by a flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub space: ParameterSpace,
    pub atmosphere: Atmosphere,
    pub mesh_resolution: MeshResolution,
    /// Surrogate used by `predict` and `optimize`.
    pub backend: SurrogateRef,
    /// Dataset root used when neither `--data` nor `WINGFORGE_DATA` is set.
    pub data: Option<PathBuf>,
    /// Settings for `serve`; space, atmosphere and resolution above take
    /// precedence when a config file sets them.
    pub service: Option<ServiceConfig>,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            space: ParameterSpace::default(),
            atmosphere: Atmosphere::default(),
            mesh_resolution: MeshResolution::default(),
            backend: SurrogateRef::BuiltinLiftline { fields: None },
            data: None,
            service: None,
        }
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).input_ctx(format!("reading config {}", path.display()))?;
        let config: Self = serde_json::from_str(&text).input_ctx(format!("parsing config {}", path.display()))?;
        config.space.validate().input_ctx("config space")?;
        config.atmosphere.validate().input_ctx("config atmosphere")?;
        config.mesh_resolution.validate().input_ctx("config mesh_resolution")?;
        Ok(config)
    }

    /// `flag`, else the config file's `data` entry.
    pub fn data_root(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf).or_else(|| self.data.clone())
    }

    pub fn service_config(&self) -> ServiceConfig {
        let mut s = self.service.clone().unwrap_or_default();
        s.space = self.space;
        s.atmosphere = self.atmosphere;
        s.mesh_resolution = self.mesh_resolution;
        s
    }
}

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::DEFAULT_CLOCK_HZ;
use crate::channel::{ChannelParams, NoiseModel};
use crate::model::{parse_json, CoreConfig, ModelError, SCHEMA_VERSION};

/// A core given by preset name or spelled out in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoreChoice {
    Preset(String),
    Custom(CoreConfig),
}

impl CoreChoice {
    pub fn resolve(&self) -> Result<CoreConfig, ModelError> {
        let config = match self {
            CoreChoice::Preset(name) => CoreConfig::preset(name)?,
            CoreChoice::Custom(config) => config.clone(),
        };
        config.validate()?;
        Ok(config)
    }
}

impl Default for CoreChoice {
    fn default() -> Self {
        CoreChoice::Preset("skylake".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Fig4a,
    Fig4b,
    Fig4c,
    Appendix,
    Channel0,
    Channel1,
    /// Hand-written cache gadget trace; classify only.
    #[value(skip)]
    CacheFixture,
}

fn default_clock() -> f64 {
    DEFAULT_CLOCK_HZ
}

/// One experiment, as read from a JSON file.
///
/// ```json
/// {"v": 1, "core": "skylake", "channel": {"n_recv_divs": 12}, "noise": {"kind": "none"}, "seed": 7}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub v: u32,
    #[serde(default)]
    pub core: CoreChoice,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub scenario: Option<ScenarioName>,
    /// Nominal clock for KB/s reporting.
    #[serde(default = "default_clock")]
    pub clock_hz: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            v: SCHEMA_VERSION,
            core: CoreChoice::default(),
            channel: ChannelParams::default(),
            noise: NoiseModel::None,
            seed: None,
            outputs: None,
            scenario: None,
            clock_hz: DEFAULT_CLOCK_HZ,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let config: ExperimentConfig = parse_json(text)?;
        if config.v != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion(config.v));
        }
        config.core.resolve()?;
        if !(config.clock_hz.is_finite() && config.clock_hz > 0.0) {
            return Err(ModelError::InvalidConfig(format!("clock_hz must be positive, got {}", config.clock_hz)));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Hex SHA-256 of a value's JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(value).expect("value serializes")))
}

/// First line of every artifact.
pub fn artifact_header(seed: Option<u64>, hash: &str) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!("# v={SCHEMA_VERSION} seed={seed} config={hash}\n")
}

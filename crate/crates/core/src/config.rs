//! Run configuration file: one section per subsystem, all fields optional.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AttackConfig;
use crate::capacity::SearchConfig;
use crate::codec::CodecConfig;
use crate::harness::ExperimentConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("override {0:?} must look like section.key=value")]
    BadOverride(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub codec: CodecConfig,
    pub attack: AttackConfig,
    pub search: SearchConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Applies `section.key=value` overrides; unknown keys are rejected.
    ///
    /// Values are read as TOML literals, falling back to a bare string, so
    /// `experiment.strategy=babble` and `experiment.input=[0.3, 0.7]` both work.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut doc = toml::Table::try_from(self).expect("run config is a table");
        for o in overrides {
            let o = o.as_ref();
            let bad = || ConfigError::BadOverride(o.to_string());
            let (path, raw) = o.split_once('=').ok_or_else(bad)?;
            let (section, key) = path.trim().split_once('.').ok_or_else(bad)?;
            if section.is_empty() || key.is_empty() || key.contains('.') {
                return Err(bad());
            }
            let raw = raw.trim();
            let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
                Ok(mut t) => t.remove("v").expect("parsed key"),
                Err(_) => toml::Value::String(raw.to_string()),
            };
            doc.entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(bad)?
                .insert(key.to_string(), value);
        }
        Ok(doc.try_into()?)
    }
}

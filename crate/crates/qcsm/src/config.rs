use std::path::Path;

use qcsm_core::{build_scenario, ConfigError, ScenarioConfig, ServiceId};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{} invalid field(s)", .0.len())]
    Invalid(Vec<ConfigError>),
}

/// A scenario together with the SHA-256 of the bytes it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub hash: String,
    pub source: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses a scenario document. Every invariant violation is reported, not
/// just the first.
pub fn parse_config(bytes: &[u8], path: &str) -> Result<ScenarioConfig, LoadError> {
    let config: ScenarioConfig = serde_json::from_slice(bytes).map_err(|source| LoadError::Parse {
        path: path.to_owned(),
        source,
    })?;
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(LoadError::Invalid(violations))
    }
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, LoadError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: display.clone(),
        source,
    })?;
    Ok(LoadedConfig {
        config: parse_config(&bytes, &display)?,
        hash: sha256_hex(&bytes),
        source: Some(display),
    })
}

/// The three-service, 150-sensor scenario, hashed over its pretty JSON form.
pub fn default_config() -> LoadedConfig {
    let config = build_scenario(&ServiceId::ALL, 150, 0).expect("default scenario is valid");
    LoadedConfig {
        hash: sha256_hex(&to_json(&config)),
        config,
        source: None,
    }
}

pub fn load_or_default(path: Option<&Path>) -> Result<LoadedConfig, LoadError> {
    match path {
        Some(p) => load_config(p),
        None => Ok(default_config()),
    }
}

pub fn to_json(config: &ScenarioConfig) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(config).expect("configs always serialize");
    out.push(b'\n');
    out
}

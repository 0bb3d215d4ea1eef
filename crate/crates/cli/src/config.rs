//! Run configuration: JSON file plus `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use memsosc::oscillator::OscDesign;
use memsosc::phase_noise::PnOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub design: OscDesign,
    pub pn: PnOptions,
    /// Phase-noise offset, Hz.
    pub offset_hz: f64,
    /// Tank detuning points for `detune`, Hz.
    pub detune_deltas_hz: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            design: OscDesign::default(),
            pn: PnOptions::default(),
            offset_hz: 1e6,
            detune_deltas_hz: (-8..=8).map(|i| f64::from(i) * 0.5e9).collect(),
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    /// File missing, unreadable or not JSON.
    Unreadable(String),
    /// Well-formed input that does not describe a valid run.
    Invalid(String),
}

/// Set `path` (dot separated) in `root` to `raw`, read as JSON when it parses
/// and as a string otherwise. Missing objects along the way are created.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<(), String> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(format!("bad override key `{path}`"));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(format!("`{}` is not an object", keys[..i].join(".")));
        };
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override path has at least one key")
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Unreadable(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| ConfigError::Unreadable(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("override `{o}` is not key=value")))?;
        apply_override(&mut root, k.trim(), v.trim()).map_err(ConfigError::Invalid)?;
    }
    let cfg: RunConfig =
        serde_json::from_value(root).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    cfg.design
        .validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if !(cfg.offset_hz.is_finite() && cfg.offset_hz > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "offset_hz must be positive, got {}",
            cfg.offset_hz
        )));
    }
    Ok(cfg)
}

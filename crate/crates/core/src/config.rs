//! Top-level TOML configuration with dotted `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cam::CamConfig;
use crate::device::MosParams;
use crate::fabric::FabricConfig;
use crate::mismatch::MismatchSpec;
use crate::network::NetworkConfig;
use crate::neuron::{NeuronParams, RateOptions, SynapseParams};
use crate::power::PowerConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    pub nmos: MosParams,
    pub pmos: MosParams,
    /// Channel lengths swept (nm).
    pub lengths_nm: Vec<f64>,
    /// Upper end of the |V_GS| sweep (V).
    pub vgs_max: f64,
    pub vds: f64,
    pub steps: usize,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            nmos: MosParams::nmos(),
            pmos: MosParams::pmos(),
            lengths_nm: vec![180.0, 500.0, 1000.0],
            vgs_max: 1.0,
            vds: 0.5,
            steps: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub dt: f64,
    pub warmup: f64,
    /// Counting window after warm-up (s).
    pub window: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        let r = RateOptions::default();
        Self {
            dt: r.dt,
            warmup: r.warmup,
            window: 2.0,
        }
    }
}

impl RateConfig {
    pub fn options(&self) -> RateOptions {
        RateOptions {
            dt: self.dt,
            warmup: self.warmup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub engine: EngineConfig,
    pub device: DeviceConfig,
    pub neuron: NeuronParams,
    pub synapse: SynapseParams,
    pub rate: RateConfig,
    pub mismatch: MismatchSpec,
    pub fabric: FabricConfig,
    pub cam: CamConfig,
    pub network: NetworkConfig,
    pub power: PowerConfig,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

fn parse_error(origin: &str, text: &str, e: &toml::de::Error) -> ConfigError {
    let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
    ConfigError::Parse {
        origin: origin.to_string(),
        line,
        column,
        message: e.message().to_string(),
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Invalid(format!("override `{assignment}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Invalid(format!("override key `{key}` is malformed")));
    }
    let (last, parents) = path.split_last().expect("split yields one part");
    let mut t = table;
    for p in parents {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Invalid(format!("override `{key}`: `{p}` is not a table")))?;
    }
    t.insert(last.to_string(), override_value(raw.trim()));
    Ok(())
}

impl Config {
    /// Parses `text` and applies `sets` in order.
    pub fn from_toml(text: &str, origin: &str, sets: &[String]) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| parse_error(origin, text, &e))?;
        if sets.is_empty() {
            cfg.validate()?;
            return Ok(cfg);
        }
        let mut table: toml::Table = text.parse().map_err(|e| parse_error(origin, text, &e))?;
        for s in sets {
            apply_set(&mut table, s)?;
        }
        let merged = toml::to_string(&table).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let cfg: Self = toml::from_str(&merged).map_err(|e| {
            let section = e
                .span()
                .and_then(|s| merged[..s.start].lines().rev().find(|l| l.starts_with('[')))
                .map_or(String::new(), |h| format!(" in {}", h.trim()));
            ConfigError::Invalid(format!("override{section}: {}", e.message().trim()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, sets: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string(), sets)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |section: &str, e: &dyn std::fmt::Display| {
            ConfigError::Invalid(format!("[{section}] {e}"))
        };
        for (name, m) in [("device.nmos", &self.device.nmos), ("device.pmos", &self.device.pmos)] {
            m.validate().map_err(|e| invalid(name, &e))?;
        }
        self.neuron.validate().map_err(|e| invalid("neuron", &e))?;
        self.synapse.validate().map_err(|e| invalid("synapse", &e))?;
        if !(self.rate.dt > 0.0 && self.rate.warmup >= 0.0 && self.rate.window > 0.0) {
            return Err(invalid("rate", &"dt and window must be positive, warmup non-negative"));
        }
        self.mismatch.validate().map_err(|e| invalid("mismatch", &e))?;
        self.fabric.delay.validate().map_err(|e| invalid("fabric", &e))?;
        self.cam.validate().map_err(|e| invalid("cam", &e))?;
        self.network
            .validate(&self.cam)
            .map_err(|e| invalid("network", &e))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

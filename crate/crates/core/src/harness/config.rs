use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::env::EnvConfig;
use crate::mdp::UnreachedStates;
use crate::schedule::TemperatureSchedule;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config does not match the schema: {0}")]
    Schema(String),
    #[error("bad override `{entry}`: {reason}")]
    Override { entry: String, reason: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("unknown preset `{0}` (expected chain, cliffwalking, frozenlake or bandit-fig2)")]
    UnknownPreset(String),
}

/// Settings of the fixed-temperature policy-improvement demo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub arms: usize,
    pub eta: f64,
    pub iterations: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            arms: 10,
            eta: 2.0,
            iterations: 25,
        }
    }
}

/// Everything one sweep needs. Bandit sweeps use `horizon`, `arms`, `sigma2`
/// and `snapshot_horizons`; MDP sweeps use `env` and `iterations`. Both read
/// `samples_per_update` (steps between bandit updates, or transitions per
/// policy-iteration batch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    pub schedule: TemperatureSchedule,
    pub runs: usize,
    pub horizon: usize,
    pub iterations: usize,
    pub samples_per_update: usize,
    pub arms: usize,
    pub sigma2: f64,
    pub snapshot_horizons: Vec<usize>,
    pub env: EnvConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub warm_start: bool,
    pub close_batches: bool,
    /// Rule for states the improved policy stops visiting (MDP sweeps).
    pub unreached_states: UnreachedStates,
    pub demo: DemoConfig,
    /// Worker threads; all available cores when `None`. Results do not
    /// depend on it.
    pub workers: Option<usize>,
}

pub const BANDIT_ALPHAS: [f64; 12] = [-50.0, -10.0, -3.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 10.0, 50.0];
pub const MDP_ALPHAS: [f64; 9] = [-10.0, -5.0, -1.0, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alphas: BANDIT_ALPHAS.to_vec(),
            schedule: TemperatureSchedule { eta0: 1.0, decay: 0.8 },
            runs: 400,
            horizon: 800,
            iterations: 30,
            samples_per_update: 20,
            arms: 20,
            sigma2: 0.5,
            snapshot_horizons: vec![200, 400, 800],
            env: EnvConfig::preset("chain").expect("chain preset exists"),
            seed: 0,
            output_dir: PathBuf::from("out"),
            warm_start: true,
            close_batches: true,
            unreached_states: UnreachedStates::Error,
            demo: DemoConfig::default(),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    /// Settings from the experiment descriptions: the three grid worlds use
    /// their appendix tables, `bandit-fig2` the regret study.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let grid = |iterations, samples, eta0, decay| Self {
            alphas: MDP_ALPHAS.to_vec(),
            schedule: TemperatureSchedule { eta0, decay },
            runs: 10,
            iterations,
            samples_per_update: samples,
            env: EnvConfig::preset(name).expect("grid preset names match"),
            output_dir: PathBuf::from(format!("out/{name}")),
            ..Self::default()
        };
        match name {
            "chain" => Ok(grid(30, 800, 15.0, 0.9)),
            "cliffwalking" => Ok(grid(40, 1500, 50.0, 0.9)),
            "frozenlake" => Ok(grid(50, 2000, 1.0, 0.8)),
            "bandit-fig2" => Ok(Self {
                output_dir: PathBuf::from("out/bandit-fig2"),
                ..Self::default()
            }),
            _ => Err(ConfigError::UnknownPreset(name.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: &str| Err(ConfigError::Invalid {
            field,
            reason: reason.to_string(),
        });
        if self.alphas.is_empty() {
            return invalid("alphas", "need at least one value");
        }
        if self.alphas.iter().any(|a| !a.is_finite()) {
            return invalid("alphas", "values must be finite");
        }
        if let Err(e) = self.schedule.validate() {
            return invalid("schedule", &e.to_string());
        }
        if self.runs == 0 {
            return invalid("runs", "must be at least 1");
        }
        if self.horizon == 0 {
            return invalid("horizon", "must be at least 1");
        }
        if self.iterations == 0 {
            return invalid("iterations", "must be at least 1");
        }
        if self.samples_per_update == 0 {
            return invalid("samples_per_update", "must be at least 1");
        }
        if self.arms == 0 {
            return invalid("arms", "must be at least 1");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return invalid("sigma2", "must be positive and finite");
        }
        if self.snapshot_horizons.iter().any(|&h| h == 0 || h > self.horizon) {
            return invalid("snapshot_horizons", "entries must lie in 1..=horizon");
        }
        if self.demo.arms == 0 {
            return invalid("demo.arms", "must be at least 1");
        }
        if !(self.demo.eta > 0.0 && self.demo.eta.is_finite()) {
            return invalid("demo.eta", "must be positive and finite");
        }
        if self.workers == Some(0) {
            return invalid("workers", "must be at least 1");
        }
        Ok(())
    }

    /// Apply `key=value` overrides (dotted keys for nested fields; the value
    /// is read as JSON and falls back to a plain string), then validate.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut tree = serde_json::to_value(&self).map_err(|e| ConfigError::Schema(e.to_string()))?;
        for entry in overrides {
            apply_override(&mut tree, entry.as_ref())?;
        }
        let config: Self = serde_json::from_value(tree).map_err(|e| ConfigError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

fn apply_override(tree: &mut Value, entry: &str) -> Result<(), ConfigError> {
    let fail = |reason: String| ConfigError::Override {
        entry: entry.to_string(),
        reason,
    };
    let (key, raw) = entry.split_once('=').ok_or_else(|| fail("expected key=value".into()))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = tree;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| fail(format!("`{part}` is not inside an object")))?;
        if parts.peek().is_none() {
            if !map.contains_key(part) {
                return Err(fail(format!("unknown field `{part}`")));
            }
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .get_mut(part)
            .ok_or_else(|| fail(format!("unknown field `{part}`")))?;
    }
    Err(fail("empty key".into()))
}

/// Read a JSON config (missing fields take their defaults), apply overrides
/// and validate.
pub fn parse_config<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.with_overrides(overrides)
}

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::lacunary::ModulusFamily;
use crate::measures::{Mode, DEFAULT_WINDOW};
use crate::spectral::LimitPolicy;

use super::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A family given either as a short descriptor (`geometric:3`) or as the
/// tagged JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Text(String),
    Object(ModulusFamily),
}

impl FamilySpec {
    pub fn resolve(&self) -> Result<ModulusFamily, CliError> {
        match self {
            FamilySpec::Text(s) => s.parse().map_err(CliError::Lib),
            FamilySpec::Object(f) => Ok(f.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

/// Every experiment parameter. Keys match the command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub family: Option<FamilySpec>,
    /// Number of elements listed by `gen`.
    #[serde(default)]
    pub n: Option<u64>,
    /// Values of `N` for averages.
    #[serde(rename = "N", default, deserialize_with = "one_or_many")]
    pub big_n: Vec<u64>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub angles: Vec<String>,
    /// Adds the angles `i/Q`, `0 ≤ i < Q`.
    #[serde(default)]
    pub grid: Option<u64>,
    /// Adds `θ(η)` for every word of length `K`.
    #[serde(default)]
    pub eta_all: bool,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(rename = "K", default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub eta: Option<String>,
    #[serde(default)]
    pub nmax: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_precision")]
    pub precision: u32,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub check_blocks: bool,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_k_max() -> usize {
    LimitPolicy::default().k_max
}

fn default_tail_tol() -> f64 {
    LimitPolicy::default().tail_tol
}

fn default_precision() -> u32 {
    256
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

/// Precisions accepted by `--precision`.
pub const PRECISIONS: [u32; 5] = [24, 53, 128, 256, 512];

impl ExperimentConfig {
    pub fn policy(&self) -> LimitPolicy {
        LimitPolicy {
            k_max: self.k_max,
            tail_tol: self.tail_tol,
        }
    }

    pub fn family(&self) -> Result<ModulusFamily, CliError> {
        self.family
            .as_ref()
            .ok_or_else(|| CliError::Config("missing family".into()))?
            .resolve()
    }

    pub fn require_k(&self) -> Result<usize, CliError> {
        self.k.ok_or_else(|| CliError::Config("missing K".into()))
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        if !PRECISIONS.contains(&self.precision) {
            return Err(CliError::Config(format!(
                "precision must be one of {PRECISIONS:?}, got {}",
                self.precision
            )));
        }
        if self.k_max < 2 {
            return Err(CliError::Config("k_max must be >= 2".into()));
        }
        if self.tail_tol.is_nan() || self.tail_tol <= 0.0 {
            return Err(CliError::Config("tail_tol must be positive".into()));
        }
        if self.samples.is_some() && self.seed.is_none() {
            return Err(CliError::Config("samples requires an explicit seed".into()));
        }
        if self.samples == Some(0) {
            return Err(CliError::Config("samples must be >= 1".into()));
        }
        if self.big_n.contains(&0) || self.n == Some(0) {
            return Err(CliError::Config("N must be >= 1".into()));
        }
        if self.grid == Some(0) {
            return Err(CliError::Config("grid must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// Overlay `source` onto `target` key by key.
pub fn overlay(target: &mut Map<String, Value>, source: Map<String, Value>) {
    for (k, v) in source {
        target.insert(k, v);
    }
}

/// `key=value`, where the value is read as JSON when it parses and as a
/// string otherwise.
pub fn parse_assignment(s: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {s:?}")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("--set has an empty key in {s:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

pub fn from_value(value: Value) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("bad configuration: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

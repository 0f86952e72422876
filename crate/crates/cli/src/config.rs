use std::fmt;
use std::path::{Path, PathBuf};

use corridor_core::analysis::LayerCriteria;
use corridor_core::bvp::{default_cells, SolverOptions};
use corridor_core::geometry::ProfileShape;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A malformed scenario file or override; always a user-side rejection.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_alpha: usize,
    pub n_beta: usize,
    /// Grid points closer than this to a region boundary are skipped.
    pub margin: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_alpha: 12,
            n_beta: 12,
            margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub eps_list: Vec<f64>,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            eps_list: [-2.0, -2.5, -3.0, -3.5, -4.0].iter().map(|e| 10f64.powf(*e)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub profile: ProfileShape,
    #[serde(rename = "L", default = "unit_length")]
    pub length: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub n_cells: Option<usize>,
    #[serde(default)]
    pub continuation: SolverOptions,
    #[serde(default)]
    pub layers: LayerCriteria,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    /// Slow points written for a singular orbit.
    #[serde(default = "default_orbit_samples")]
    pub orbit_samples: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn unit_length() -> f64 {
    1.0
}

fn default_orbit_samples() -> usize {
    201
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ScenarioConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let at = |e: &dyn fmt::Display| ConfigError(format!("{}: {e}", path.display()));
        if overrides.is_empty() {
            let mut de = serde_json::Deserializer::from_str(&text);
            let config = serde_path_to_error::deserialize(&mut de).map_err(|e| at(&keyed(&e)))?;
            de.end().map_err(|e| at(&e))?;
            return Ok(config);
        }
        let mut value: Value = serde_json::from_str(&text).map_err(|e| at(&e))?;
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        serde_path_to_error::deserialize(value).map_err(|e| at(&keyed(&e)))
    }

    pub fn require(&self, name: &str, value: Option<f64>) -> Result<f64, ConfigError> {
        value.ok_or_else(|| ConfigError(format!("`{name}` is required for this command")))
    }

    /// Fills in the defaults that depend on other fields, so that sidecars
    /// record exactly what was run.
    pub fn resolve(&mut self, fixed_eps: bool) {
        if let (true, Some(eps)) = (fixed_eps, self.epsilon) {
            if eps > 0.0 && self.length > 0.0 {
                self.n_cells.get_or_insert(default_cells(self.length, eps));
                self.continuation.eps_start.get_or_insert(eps.max(1.0));
            }
        }
    }
}

fn keyed(e: &serde_path_to_error::Error<serde_json::Error>) -> String {
    match e.path().to_string().as_str() {
        "." => e.inner().to_string(),
        path => format!("at `{path}`: {}", e.inner()),
    }
}

/// `key.sub=value`; the value is read as JSON when it parses, else as a
/// string.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), ConfigError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override `{item}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError(format!("override `{item}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let Value::Object(map) = node else {
            return Err(ConfigError(format!("override `{item}`: `{key}` is not inside an object")));
        };
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let Value::Object(map) = node else {
        return Err(ConfigError(format!("override `{item}` does not address an object field")));
    };
    map.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

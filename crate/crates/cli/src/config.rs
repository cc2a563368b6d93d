//! Experiment configuration: a single TOML file plus command-line overrides.
//!
//! The file is parsed to a TOML tree first so `--override key.path=value`
//! edits apply before deserialization; the canonical serialization of the
//! resolved config is what gets hashed into the manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub quantizers: QuantizerConfig,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub build: BuildConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub learning: LearningSection,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Builtin model name.
    pub name: String,
    /// Parameter overrides passed to the builtin constructor.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QuantizerConfig {
    /// Hidden-state bins per dimension.
    pub state_bins: Vec<usize>,
    /// Observation bins per dimension (the M of the observation alphabet).
    pub obs_bins: Vec<usize>,
    /// Belief simplex lattice resolution m.
    pub simplex_resolution: u32,
    /// Largest belief state space solved exactly; larger grids switch to the
    /// reachable-closure solver.
    pub belief_budget: usize,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            state_bins: vec![8],
            obs_bins: vec![4],
            simplex_resolution: 10,
            belief_budget: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub length: usize,
    /// Frozen predictor: "prior" or "uniform".
    pub pi_star: String,
    pub warmup_action: usize,
    /// Cap on n_obs^(N+1) * n_actions^N.
    pub budget: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            length: 1,
            pi_star: "prior".into(),
            warmup_action: 0,
            budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    /// Monte Carlo samples per quantization cell.
    pub n_samples: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self { n_samples: 20_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LearningSection {
    pub steps: usize,
    /// Per-action exploration probabilities; empty means uniform.
    pub exploration: Vec<f64>,
    pub checkpoints: Vec<usize>,
}

impl Default for LearningSection {
    fn default() -> Self {
        Self {
            steps: 200_000,
            exploration: Vec::new(),
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    /// Rollout horizon; 0 derives it from `truncation_tol`.
    pub horizon: usize,
    pub truncation_tol: f64,
    pub n_paths: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            horizon: 0,
            truncation_tol: 1e-4,
            n_paths: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    /// Number of L_t estimates (t = 0 .. t_max - 1).
    pub t_max: usize,
    pub n_paths: usize,
    pub ltv_budget: usize,
    pub k_samples: usize,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            t_max: 10,
            n_paths: 1000,
            ltv_budget: 200,
            k_samples: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub obs_bins: Vec<usize>,
    pub windows: Vec<usize>,
    pub simplex_resolutions: Vec<u32>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            obs_bins: vec![2, 4],
            windows: vec![0, 1],
            simplex_resolutions: vec![10],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, reason: String| {
            Err(CliError::Validation(format!("config field `{field}`: {reason}")))
        };
        if self.model.name.is_empty() {
            return fail("model.name", "must not be empty".into());
        }
        if self.quantizers.state_bins.is_empty()
            || self.quantizers.state_bins.iter().any(|&b| b == 0)
        {
            return fail(
                "quantizers.state_bins",
                "needs at least one positive entry".into(),
            );
        }
        if self.quantizers.obs_bins.is_empty() || self.quantizers.obs_bins.iter().any(|&b| b == 0) {
            return fail(
                "quantizers.obs_bins",
                "needs at least one positive entry".into(),
            );
        }
        if self.quantizers.simplex_resolution == 0 {
            return fail("quantizers.simplex_resolution", "must be >= 1".into());
        }
        match self.window.pi_star.as_str() {
            "prior" | "uniform" => {}
            other => {
                return fail(
                    "window.pi_star",
                    format!("expected \"prior\" or \"uniform\", got \"{other}\""),
                )
            }
        }
        if self.build.n_samples == 0 {
            return fail("build.n_samples", "must be >= 1".into());
        }
        if !(self.solver.tol > 0.0) {
            return fail("solver.tol", "must be positive".into());
        }
        if self.learning.steps == 0 {
            return fail("learning.steps", "must be >= 1".into());
        }
        if !self.learning.exploration.is_empty() {
            let sum: f64 = self.learning.exploration.iter().sum();
            if self.learning.exploration.iter().any(|&p| p <= 0.0) || (sum - 1.0).abs() > 1e-9 {
                return fail(
                    "learning.exploration",
                    "probabilities must be positive and sum to 1".into(),
                );
            }
        }
        if self.evaluation.n_paths == 0 {
            return fail("evaluation.n_paths", "must be >= 1".into());
        }
        if self.evaluation.horizon == 0 && !(self.evaluation.truncation_tol > 0.0) {
            return fail(
                "evaluation.truncation_tol",
                "must be positive when horizon = 0".into(),
            );
        }
        if self.sweep.obs_bins.is_empty()
            || self.sweep.windows.is_empty()
            || self.sweep.simplex_resolutions.is_empty()
        {
            return fail("sweep", "obs_bins, windows, simplex_resolutions must be non-empty".into());
        }
        Ok(())
    }

    /// Canonical serialization used for hashing and the manifest.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parse a scalar override value: integer, float, boolean, or string; a
/// comma-separated list becomes a TOML array of the scalar kind.
fn parse_override_value(raw: &str) -> toml::Value {
    if raw.contains(',') {
        let items: Vec<toml::Value> = raw.split(',').map(parse_override_value).collect();
        return toml::Value::Array(items);
    }
    if let Ok(v) = raw.parse::<i64>() {
        return toml::Value::Integer(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return toml::Value::Float(v);
    }
    if let Ok(v) = raw.parse::<bool>() {
        return toml::Value::Boolean(v);
    }
    toml::Value::String(raw.to_string())
}

fn apply_override(tree: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("override `{key}`: `{part}` is not a table")))?
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| CliError::Validation(format!("override `{key}`: parent is not a table")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Load a config file, apply `--override key=value` pairs and the optional
/// seed/output overrides, validate.
pub fn load_config(
    path: &Path,
    seed: Option<u64>,
    out: Option<&str>,
    overrides: &[String],
) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Validation(format!("config parse error: {e}")))?;
    let mut tree = toml::Value::Table(table);
    for pair in overrides {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            CliError::Validation(format!("override `{pair}` must have the form key=value"))
        })?;
        apply_override(&mut tree, key.trim(), parse_override_value(value.trim()))?;
    }
    if let Some(seed) = seed {
        apply_override(&mut tree, "seed", toml::Value::Integer(seed as i64))?;
    }
    if let Some(out) = out {
        apply_override(&mut tree, "output_dir", toml::Value::String(out.to_string()))?;
    }
    let config: ExperimentConfig = tree
        .try_into()
        .map_err(|e| CliError::Validation(format!("config error: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// SHA-256 of the canonical config serialization, hex-encoded.
pub fn config_hash(config: &ExperimentConfig) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(config.canonical_toml().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

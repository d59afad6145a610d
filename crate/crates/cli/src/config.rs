//! Flat JSON run and sweep configuration.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use mite_core::measurement::{Backend, DEFAULT_EPSILON_BOUND};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleQubit,
    Tfim,
    Search,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Kraus,
    Pointer,
}

impl From<BackendKind> for Backend {
    fn from(b: BackendKind) -> Self {
        match b {
            BackendKind::Kraus => Backend::Kraus,
            BackendKind::Pointer => Backend::Pointer,
        }
    }
}

/// Solution index of a search instance, or `"random"` to draw it from the seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Solution {
    Index(usize),
    Named(String),
}

impl Default for Solution {
    fn default() -> Self {
        Solution::Named("random".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Chain length for `tfim`.
    pub qubits: usize,
    pub lambda: f64,
    pub omega: f64,
    /// Hilbert space dimension for `search`.
    pub dim: usize,
    pub solution: Solution,
    pub epsilon: f64,
    /// Largest allowed `ε·‖H⁽ʲ⁾‖`.
    pub epsilon_bound: f64,
    /// Defaults to `⌈20/ε⌉`.
    pub steps: Option<usize>,
    pub trajectories: usize,
    pub seed: u64,
    pub correction: Switch,
    pub backend: BackendKind,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::SingleQubit,
            qubits: 2,
            lambda: 1.0,
            omega: 1.0,
            dim: 16,
            solution: Solution::default(),
            epsilon: 0.1,
            epsilon_bound: DEFAULT_EPSILON_BOUND,
            steps: None,
            trajectories: 100,
            seed: 0,
            correction: Switch::On,
            backend: BackendKind::Kraus,
            out: PathBuf::from("out"),
        }
    }
}

pub fn default_steps(epsilon: f64) -> usize {
    (20.0 / epsilon).ceil() as usize
}

impl RunConfig {
    pub fn resolved_steps(&self) -> usize {
        self.steps.unwrap_or_else(|| default_steps(self.epsilon))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.epsilon_bound > 0.0 && self.epsilon_bound < 1.0) {
            return bad(format!("epsilon_bound must lie in (0, 1), got {}", self.epsilon_bound));
        }
        if self.trajectories == 0 {
            return bad("trajectories must be at least 1".into());
        }
        if self.steps == Some(0) {
            return bad("steps must be at least 1".into());
        }
        match self.model {
            ModelKind::Tfim if self.qubits < 2 => bad(format!("tfim needs at least 2 qubits, got {}", self.qubits)),
            ModelKind::Tfim if !(self.lambda >= 0.0 && self.omega >= 0.0) => {
                bad(format!("couplings must be non-negative, got lambda={} omega={}", self.lambda, self.omega))
            }
            ModelKind::Search if self.dim < 2 || !self.dim.is_power_of_two() => {
                bad(format!("dim must be a power of two >= 2, got {}", self.dim))
            }
            ModelKind::Search => match &self.solution {
                Solution::Index(i) if *i >= self.dim => bad(format!("solution {i} out of range for dim {}", self.dim)),
                Solution::Named(s) if s != "random" => bad(format!("solution must be an index or \"random\", got {s:?}")),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["steps"] = self.resolved_steps().into();
        v
    }
}

/// Reads a JSON object, dropping the `results` block that `run.json` carries.
fn read_object(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match value.as_object_mut() {
        Some(obj) => {
            obj.remove("results");
        }
        None => return Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
    }
    Ok(value)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    serde_json::from_value(read_object(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Epsilon,
    Dimension,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Settings shared by every point; the swept field is overwritten.
    #[serde(default)]
    pub template: RunConfig,
}

fn default_threshold() -> f64 {
    0.9
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Config("sweep values must not be empty".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("sweep values must be strictly increasing".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(CliError::Config(format!("threshold must lie in (0, 1], got {}", self.threshold)));
        }
        if self.variable == SweepVariable::Dimension {
            if self.template.model != ModelKind::Search {
                return Err(CliError::Config("dimension sweeps need model search".into()));
            }
            if let Some(v) = self.values.iter().find(|v| v.fract() != 0.0 || **v < 2.0 || !(**v as usize).is_power_of_two()) {
                return Err(CliError::Config(format!("dimension {v} is not a power of two >= 2")));
            }
        }
        if self.variable == SweepVariable::Epsilon && self.values[0] <= 0.0 {
            return Err(CliError::Config("epsilon values must be positive".into()));
        }
        let mut probe = self.template.clone();
        if self.variable == SweepVariable::Epsilon {
            probe.epsilon = self.values[0];
        }
        probe.validate()
    }
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig, CliError> {
    serde_json::from_value(read_object(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.resolved_steps(), 200);
    }

    #[test]
    fn flat_keys_parse() {
        let c: RunConfig = serde_json::from_str(
            r#"{"model":"search","dim":8,"solution":3,"epsilon":0.05,"correction":"off","backend":"pointer"}"#,
        )
        .unwrap();
        assert_eq!(c.model, ModelKind::Search);
        assert_eq!(c.solution, Solution::Index(3));
        assert_eq!(c.correction, Switch::Off);
        assert_eq!(c.backend, BackendKind::Pointer);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"epsilonn":0.1}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let cases = [
            RunConfig { epsilon: 0.0, ..Default::default() },
            RunConfig { trajectories: 0, ..Default::default() },
            RunConfig { steps: Some(0), ..Default::default() },
            RunConfig { model: ModelKind::Tfim, qubits: 1, ..Default::default() },
            RunConfig { model: ModelKind::Search, dim: 12, ..Default::default() },
            RunConfig { model: ModelKind::Search, dim: 8, solution: Solution::Index(8), ..Default::default() },
            RunConfig { model: ModelKind::Search, solution: Solution::Named("first".into()), ..Default::default() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(CliError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn sweep_values_must_increase() {
        let mut s = SweepConfig {
            variable: SweepVariable::Epsilon,
            values: vec![0.02, 0.04, 0.08],
            threshold: 0.9,
            template: RunConfig { model: ModelKind::Search, ..Default::default() },
        };
        s.validate().unwrap();
        s.values = vec![0.04, 0.02];
        assert!(s.validate().is_err());
        s.values.clear();
        assert!(s.validate().is_err());
        s.variable = SweepVariable::Dimension;
        s.values = vec![4.0, 6.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn resolved_json_round_trips() {
        let c = RunConfig { model: ModelKind::Tfim, epsilon: 0.05, ..Default::default() };
        let v = c.to_json();
        assert_eq!(v["steps"], 400);
        let back: RunConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back.resolved_steps(), 400);
        assert_eq!(back.model, ModelKind::Tfim);
    }
}

//! Experiment configuration: named presets, JSON files and CLI overrides,
//! applied in that order.

use std::path::{Path, PathBuf};

use dflrb_core::attacks::AttackKind;
use dflrb_core::metrics::Norm;
use dflrb_core::surrogates::{Method, SurrogateConfig, DEFAULT_P_SOLVE};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::presets::{self, ProblemPreset};

pub const PAPER_EPSILONS: [f64; 3] = [0.01, 0.1, 0.15];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemPreset,
    /// Method for `train` and `attack`.
    pub method: Method,
    /// Methods for `sweep`; empty means every method available on `problem`.
    pub methods: Vec<Method>,
    /// Overrides the registry's surrogate settings for `method`.
    pub surrogate: Option<SurrogateConfig>,
    /// Overrides the registry's learning rate.
    pub lr: Option<f64>,
    pub trials: usize,
    pub epsilons: Vec<f64>,
    pub attacks: Vec<AttackKind>,
    /// Train / validation / test proportions.
    pub split: [f64; 3],
    pub epochs: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Dataset size; the problem's default when absent.
    pub n_instances: Option<usize>,
    /// Grid side for shortest-path problems.
    pub grid_side: Option<usize>,
    /// Per-step probability of adding `x*(ĉ)` to a ranking cache.
    pub p_solve: f64,
    /// Norm order of the prediction-error metrics.
    pub q: Norm,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemPreset::Knapsack120,
            method: Method::SpoPlus,
            methods: Vec::new(),
            surrogate: None,
            lr: None,
            trials: 10,
            epsilons: PAPER_EPSILONS.to_vec(),
            attacks: vec![AttackKind::PredictionFocused, AttackKind::DecisionFocused],
            split: [0.6, 0.2, 0.2],
            epochs: 50,
            seed: 0,
            out: PathBuf::from("results"),
            n_instances: None,
            grid_side: None,
            p_solve: DEFAULT_P_SOLVE,
            q: Norm::L1,
        }
    }
}

/// Learner settings for one method after resolving presets and overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSettings {
    pub method: Method,
    pub lr: f64,
    pub surrogate: SurrogateConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return bad(format!("epsilons must be finite and >= 0, got {e}"));
        }
        if self.attacks.is_empty() {
            return bad("at least one attack kind is required".into());
        }
        if self.split.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad(format!("split ratios must be positive, got {:?}", self.split));
        }
        if let Some(lr) = self.lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("lr must be positive, got {lr}"));
            }
        }
        if !(0.0..=1.0).contains(&self.p_solve) {
            return bad(format!("p_solve must lie in [0, 1], got {}", self.p_solve));
        }
        if let Some(s) = &self.surrogate {
            s.validate()?;
        }
        if self.n_instances.is_some_and(|n| n < 3) {
            return bad("n_instances must be at least 3".into());
        }
        Ok(())
    }

    /// Sweep methods in canonical order.
    pub fn sweep_methods(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            presets::available_methods(self.problem)
        } else {
            Method::ALL
                .into_iter()
                .filter(|m| self.methods.contains(m))
                .collect()
        }
    }

    /// Registry settings for `method`, with this config's overrides applied
    /// when `method` is the configured one.
    pub fn settings_for(&self, method: Method) -> Result<MethodSettings> {
        let row = presets::lookup(self.problem, method);
        let own = method == self.method;
        let surrogate = match (own.then(|| self.surrogate.clone()).flatten(), row) {
            (Some(s), _) => SurrogateConfig { method, ..s },
            (None, Some(r)) => r.surrogate(),
            (None, None) => {
                return Err(HarnessError::Config(format!(
                    "{method} has no preset for {}; supply surrogate and lr explicitly",
                    self.problem
                )))
            }
        };
        let lr = match (own.then_some(self.lr).flatten(), row) {
            (Some(lr), _) => lr,
            (None, Some(r)) => r.lr,
            (None, None) => {
                return Err(HarnessError::Config(format!(
                    "{method} has no preset learning rate for {}",
                    self.problem
                )))
            }
        };
        surrogate.validate()?;
        Ok(MethodSettings {
            method,
            lr,
            surrogate,
        })
    }

    /// `{0} ∪ epsilons`, ascending and deduplicated.
    pub fn epsilon_grid(&self) -> Vec<f64> {
        crate::sweep::epsilon_grid(&self.epsilons)
    }
}

/// Named starting points for `--preset`.
pub fn experiment_preset(name: &str) -> Option<ExperimentConfig> {
    if let Some(problem) = name.strip_prefix("paper-") {
        let problem = problem.parse().ok()?;
        return Some(ExperimentConfig {
            problem,
            ..Default::default()
        });
    }
    match name {
        // the scaled-down knapsack protocol used by the acceptance suite
        "desk-knapsack-120" => Some(ExperimentConfig {
            problem: ProblemPreset::Knapsack120,
            epochs: DESK_EPOCHS,
            ..Default::default()
        }),
        "smoke" => Some(ExperimentConfig {
            problem: ProblemPreset::Knapsack120,
            trials: 2,
            epochs: 2,
            n_instances: Some(30),
            ..Default::default()
        }),
        _ => None,
    }
}

pub const DESK_EPOCHS: usize = 20;

pub fn preset_names() -> Vec<String> {
    let mut names: Vec<String> = ProblemPreset::ALL
        .iter()
        .map(|p| format!("paper-{}", p.name()))
        .collect();
    names.push("desk-knapsack-120".into());
    names.push("smoke".into());
    names
}

/// Overlays the keys present in the JSON file at `path` onto `base`.
pub fn overlay_file(base: &ExperimentConfig, path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    let patch: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(patch) = patch else {
        return Err(HarnessError::Config(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    let mut merged = serde_json::to_value(base)?;
    let obj = merged.as_object_mut().expect("config serializes to an object");
    for (k, v) in patch {
        obj.insert(k, v);
    }
    serde_json::from_value(merged)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

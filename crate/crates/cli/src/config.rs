//! Experiment configuration files.

use std::path::{Path, PathBuf};

use cassl_core::env::{self, Environment, SyntheticGrasp, SyntheticGraspSpec};
use cassl_core::pipeline::proportional_budgets;
use cassl_core::{LearnerConfig, RunConfig, SaltelliDesign, StageConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PRESETS: &[&str] = &["desk", "full"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// One of `ishigami`, `gfunction`, `tabletop-6d`.
    pub preset: String,
    /// Replaces the `tabletop-6d` coefficients, space and context pools.
    pub grasp: Option<SyntheticGraspSpec>,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            preset: "tabletop-6d".into(),
            grasp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_base: usize,
    pub second_order: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_base: 32,
            second_order: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub trials_per_context: usize,
    pub checkpoints: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            trials_per_context: 5,
            checkpoints: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Total trials for the random baseline. Defaults to the curriculum
    /// run's budget with singleton stages.
    pub total_budget: Option<usize>,
    /// Explicit staged-baseline budgets. When absent the first budget is the
    /// initial design and the rest of the total is split by `staged_weights`.
    pub staged_budgets: Option<Vec<usize>>,
    pub staged_weights: Vec<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            total_budget: None,
            staged_budgets: None,
            staged_weights: vec![1960.0, 2796.0, 350.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub environment: EnvironmentConfig,
    pub sampler: SamplerConfig,
    pub stage: StageConfig,
    pub learner: LearnerConfig,
    pub evaluation: EvaluationConfig,
    pub baseline: BaselineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// 448 initial trials and six stages of 128, 1216 in total.
    pub fn desk() -> Self {
        Self {
            name: "desk".into(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            environment: EnvironmentConfig::default(),
            sampler: SamplerConfig::default(),
            stage: StageConfig::default(),
            learner: LearnerConfig::default(),
            evaluation: EvaluationConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }

    /// 1960 initial trials (N = 140), 466 per stage, staged baseline split
    /// 1960 / 2796 / 350.
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            sampler: SamplerConfig {
                n_base: 140,
                second_order: true,
            },
            stage: StageConfig {
                samples_per_stage: 466,
                ..StageConfig::default()
            },
            baseline: BaselineConfig {
                total_budget: Some(4756),
                staged_budgets: Some(vec![1960, 2796, 350]),
                ..BaselineConfig::default()
            },
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(CliError::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build_env(&self) -> Result<Box<dyn Environment>, CliError> {
        match &self.environment.grasp {
            Some(spec) if self.environment.preset == "tabletop-6d" => Ok(Box::new(
                SyntheticGrasp::new(spec.clone()).map_err(CliError::config)?,
            )),
            Some(_) => Err(CliError::Config(format!(
                "grasp overrides apply to `tabletop-6d`, not `{}`",
                self.environment.preset
            ))),
            None => env::preset(&self.environment.preset).map_err(CliError::config),
        }
    }

    /// Best achievable mean success on the (seen, novel) pools, when the
    /// environment exposes ground truth.
    pub fn ceiling(&self) -> Option<(f64, f64)> {
        if self.environment.preset != "tabletop-6d" {
            return None;
        }
        let spec = self
            .environment
            .grasp
            .clone()
            .unwrap_or_else(SyntheticGraspSpec::tabletop_6d);
        let env = SyntheticGrasp::new(spec).ok()?;
        Some((
            env.ceiling(env.seen_contexts()),
            env.ceiling(env.novel_contexts()),
        ))
    }

    pub fn design(&self, k: usize) -> Result<SaltelliDesign, CliError> {
        SaltelliDesign::new(k, self.sampler.n_base, self.sampler.second_order)
            .map_err(CliError::config)
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        if !self.sampler.second_order {
            return Err(CliError::Config(
                "curriculum runs need a second-order design (sampler.second_order = true)".into(),
            ));
        }
        let cfg = RunConfig {
            seed: self.seed,
            n_base: self.sampler.n_base,
            stage: self.stage.clone(),
            learner: self.learner.clone(),
            eval_trials_per_context: self.evaluation.trials_per_context,
            evaluate_checkpoints: self.evaluation.checkpoints,
        };
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }

    pub fn random_budget(&self, k: usize) -> usize {
        self.baseline
            .total_budget
            .unwrap_or(self.sampler.n_base * (2 * k + 2) + k * self.stage.samples_per_stage)
    }

    pub fn staged_budgets(&self, k: usize) -> Result<Vec<usize>, CliError> {
        if let Some(b) = &self.baseline.staged_budgets {
            return Ok(b.clone());
        }
        let first = self.sampler.n_base * (2 * k + 2);
        proportional_budgets(self.random_budget(k), first, &self.baseline.staged_weights)
            .map_err(CliError::config)
    }

    /// Checks everything that can be checked without running the experiment.
    pub fn validate(&self) -> Result<(), CliError> {
        let env = self.build_env()?;
        self.run_config()?;
        let k = env.space().len();
        self.design(k)?;
        let w = &self.baseline.staged_weights;
        if w.len() < 2 || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(CliError::Config(
                "baseline.staged_weights needs at least two positive entries".into(),
            ));
        }
        let staged = self.staged_budgets(k)?;
        if staged.is_empty() || staged.contains(&0) {
            return Err(CliError::Config("staged budgets must be positive".into()));
        }
        if self.random_budget(k) == 0 {
            return Err(CliError::Config(
                "baseline.total_budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

//! Per-dimension, per-bin success-probability models.
//!
//! A [`PolicyModel`] predicts, for a context, an independent success
//! probability for every (dimension, bin) cell. Training follows the masked
//! objective: each record contributes only to the cells of the bins it
//! actually executed, one per dimension.

mod logistic;
mod select;
mod tabular;

pub use logistic::LogisticParams;
pub use select::{
    select_eps_greedy, select_greedy, select_uncertain, select_with, Choice, SCORE_TIE,
};
pub use tabular::TabularParams;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Environment-defined object descriptor standing in for an observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub id: String,
    pub features: Vec<f64>,
}

impl Context {
    pub fn new(id: impl Into<String>, features: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            features,
        }
    }
}

/// `probs[i][j]`: success probability of bin `j` in dimension `i`. Rows are
/// independent Bernoulli parameters and need not sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinProbabilities {
    pub probs: Vec<Vec<f64>>,
}

impl BinProbabilities {
    pub fn dim(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    pub fn num_dims(&self) -> usize {
        self.probs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    #[default]
    Tabular,
    LinearLogistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Beta prior pseudo-counts (successes, failures) for the tabular learner.
    pub smoothing: (f64, f64),
    /// Number of leading one-hot context features the tabular learner clusters
    /// on; zero pools all contexts.
    pub cluster_features: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Minibatch size for the logistic learner; `None` means full batch.
    pub batch_size: Option<usize>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            kind: LearnerKind::Tabular,
            smoothing: (1.0, 1.0),
            cluster_features: 2,
            epochs: 15,
            learning_rate: 1e-4,
            batch_size: Some(64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParams {
    Tabular(TabularParams),
    LinearLogistic(LogisticParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyModel {
    pub schema_version: u32,
    pub bins: Vec<usize>,
    pub feature_len: usize,
    pub config: LearnerConfig,
    /// Number of completed `fit` calls.
    pub fits: u32,
    /// Total epochs run across all fits (logistic only).
    pub epochs_trained: u64,
    pub params: ModelParams,
}

impl PolicyModel {
    /// Untrained model: every cell predicts the prior (0.5 with the defaults).
    pub fn new(bins: Vec<usize>, feature_len: usize, config: LearnerConfig) -> Result<Self> {
        if bins.is_empty() || bins.contains(&0) {
            return Err(Error::param(
                "model needs at least one dimension with at least one bin",
            ));
        }
        let (a, b) = config.smoothing;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::param("smoothing pseudo-counts must be positive"));
        }
        if config.cluster_features > feature_len {
            return Err(Error::param(format!(
                "cannot cluster on {} features of a {feature_len}-feature context",
                config.cluster_features
            )));
        }
        if config.batch_size == Some(0) {
            return Err(Error::param("batch size must be positive"));
        }
        let params = match config.kind {
            LearnerKind::Tabular => {
                ModelParams::Tabular(TabularParams::new(&bins, config.cluster_features.max(1)))
            }
            LearnerKind::LinearLogistic => {
                ModelParams::LinearLogistic(LogisticParams::zeros(&bins, feature_len))
            }
        };
        Ok(Self {
            schema_version: MODEL_SCHEMA_VERSION,
            bins,
            feature_len,
            config,
            fits: 0,
            epochs_trained: 0,
            params,
        })
    }

    pub fn is_trained(&self) -> bool {
        self.fits > 0
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.feature_len {
            return Err(Error::Shape {
                what: "context features",
                expected: self.feature_len,
                found: features.len(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, context: &Context) -> Result<BinProbabilities> {
        self.check_features(&context.features)?;
        let probs = match &self.params {
            ModelParams::Tabular(t) => t.predict(
                &context.features,
                self.config.cluster_features,
                self.config.smoothing,
            ),
            ModelParams::LinearLogistic(l) => l.predict(&context.features),
        };
        Ok(BinProbabilities { probs })
    }

    /// Trains on `dataset` with per-record `weights`. The tabular learner
    /// refits from counts; the logistic learner continues from its current
    /// parameters. `seed` drives minibatch shuffling.
    pub fn fit(&self, dataset: &Dataset, weights: &[f64], seed: u64) -> Result<PolicyModel> {
        if dataset.is_empty() {
            return Err(Error::param("cannot fit on an empty dataset"));
        }
        if weights.len() != dataset.len() {
            return Err(Error::Shape {
                what: "record weights",
                expected: dataset.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param(
                "record weights must be finite and non-negative",
            ));
        }
        for r in dataset.records() {
            self.check_features(&r.features)?;
            if r.bins.0.len() != self.bins.len() {
                return Err(Error::Shape {
                    what: "record bins",
                    expected: self.bins.len(),
                    found: r.bins.0.len(),
                });
            }
            if let Some((i, _)) = r
                .bins
                .0
                .iter()
                .zip(&self.bins)
                .enumerate()
                .find(|(_, (b, n))| b >= n)
            {
                return Err(Error::param(format!(
                    "trial {} has bin out of range in dimension {i}",
                    r.trial_id
                )));
            }
        }
        let mut out = self.clone();
        match &mut out.params {
            ModelParams::Tabular(t) => {
                *t = TabularParams::from_records(
                    &self.bins,
                    self.config.cluster_features,
                    dataset.records(),
                    weights,
                );
            }
            ModelParams::LinearLogistic(l) => {
                l.train(dataset.records(), weights, &self.config, seed);
                out.epochs_trained += self.config.epochs as u64;
            }
        }
        out.fits += 1;
        Ok(out)
    }

    /// Weighted mean cross-entropy over executed cells.
    pub fn training_loss(&self, dataset: &Dataset, weights: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        let mut mass = 0.0;
        for (r, &w) in dataset.records().iter().zip(weights) {
            let p = self.predict(&Context::new(r.context_id.clone(), r.features.clone()))?;
            let y = f64::from(r.outcome);
            for (i, &b) in r.bins.0.iter().enumerate() {
                let q = p.probs[i][b].clamp(1e-12, 1.0 - 1e-12);
                total -= w * (y * q.ln() + (1.0 - y) * (1.0 - q).ln());
                mass += w;
            }
        }
        Ok(if mass > 0.0 { total / mass } else { 0.0 })
    }
}

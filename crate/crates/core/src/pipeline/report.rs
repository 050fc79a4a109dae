use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::curriculum::Curriculum;
use crate::space::ControlSpace;

pub const RUN_REPORT_SCHEMA_VERSION: u32 = 1;

/// Greedy evaluation of one checkpoint on one context pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEval {
    pub rate: f64,
    /// Mean ground-truth success probability of the actions taken, when the
    /// environment exposes it.
    pub expected: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub stage: usize,
    pub seen: StageEval,
    pub novel: StageEval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub method: String,
    pub seed: u64,
    pub dims: Vec<String>,
    /// Curriculum stages by dimension name; empty for non-curriculum runs.
    pub curriculum: Vec<Vec<String>>,
    pub flat_order: Vec<String>,
    /// Collection success rate of stage 0 (initial data) and each later stage.
    pub collection_success: Vec<f64>,
    /// CL0..CLK checkpoints.
    pub checkpoints: Vec<Checkpoint>,
    pub training_evaluations: usize,
    pub evaluation_trials: usize,
    pub config: RunConfig,
}

impl RunReport {
    pub(crate) fn new(method: &str, cfg: &RunConfig, space: &ControlSpace) -> Self {
        Self {
            schema_version: RUN_REPORT_SCHEMA_VERSION,
            method: method.into(),
            seed: cfg.seed,
            dims: space.names(),
            curriculum: Vec::new(),
            flat_order: Vec::new(),
            collection_success: Vec::new(),
            checkpoints: Vec::new(),
            training_evaluations: 0,
            evaluation_trials: 0,
            config: cfg.clone(),
        }
    }

    pub(crate) fn set_curriculum(&mut self, c: &Curriculum, space: &ControlSpace) {
        let name = |i: &usize| space.dim(*i).name.clone();
        self.curriculum = c
            .stages
            .iter()
            .map(|s| s.iter().map(name).collect())
            .collect();
        self.flat_order = c.flat_order.iter().map(name).collect();
    }

    pub fn final_checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

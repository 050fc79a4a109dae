//! The staged curriculum training loop and its baselines.
//!
//! [`train_cassl`] runs: quasi-random initial collection, sensitivity
//! analysis on that data, curriculum construction, then one collection stage
//! per curriculum entry. In stage `k`, dimensions already learned are chosen
//! ε_post-greedily, the stage's own dimensions by uncertainty, and later
//! dimensions ε_pre-greedily. New data is upweighted against the aggregate
//! before each refit.

mod report;
mod stage;

pub use report::{RunReport, StageEval, RUN_REPORT_SCHEMA_VERSION};
pub use stage::{
    aggregate_and_train, aggregation_weights, stage_action, Aggregated, StagePolicyAction,
};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curriculum::{build_curriculum, Curriculum};
use crate::dataset::{Dataset, TrialRecord, DATASET_SCHEMA_VERSION};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::learner::{select_greedy, select_with, Context, LearnerConfig, PolicyModel};
use crate::rng::{derive_seed, substream, tags};
use crate::sensitivity::{analyze_dataset, SensitivityReport};
use crate::sobol::{sobol_points, SaltelliDesign};
use crate::space::{ActionVector, BinnedAction, ControlSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationMode {
    /// New records carry a larger weight.
    #[default]
    Weighted,
    /// New records are repeated (rounded weight) with unit weights.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageConfig {
    pub eps_pre: f64,
    pub eps_post: f64,
    pub samples_per_stage: usize,
    /// Ratio of new-data weight mass to aggregate weight mass.
    pub new_data_weight: f64,
    pub epochs: usize,
    pub aggregation: AggregationMode,
    /// Continue training from the previous stage's model (logistic learner).
    pub warm_start: bool,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            eps_pre: 0.7,
            eps_post: 0.15,
            samples_per_stage: 128,
            new_data_weight: 2.5,
            epochs: 15,
            aggregation: AggregationMode::Weighted,
            warm_start: true,
        }
    }
}

impl StageConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("eps_pre", self.eps_pre), ("eps_post", self.eps_post)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.new_data_weight > 0.0 && self.new_data_weight.is_finite()) {
            return Err(Error::param("new_data_weight must be positive"));
        }
        if self.samples_per_stage == 0 || self.epochs == 0 {
            return Err(Error::param(
                "samples_per_stage and epochs must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Everything a run needs besides the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Saltelli base sample count for the initial collection.
    pub n_base: usize,
    pub stage: StageConfig,
    pub learner: LearnerConfig,
    /// Greedy trials per held-out context when measuring a checkpoint.
    pub eval_trials_per_context: usize,
    /// Measure every checkpoint on seen and novel contexts.
    pub evaluate_checkpoints: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_base: 32,
            stage: StageConfig::default(),
            learner: LearnerConfig::default(),
            eval_trials_per_context: 5,
            evaluate_checkpoints: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.stage.validate()?;
        if self.n_base < 2 {
            return Err(Error::param("n_base must be at least 2"));
        }
        if self.eval_trials_per_context == 0 {
            return Err(Error::param("eval_trials_per_context must be at least 1"));
        }
        Ok(())
    }

    fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            epochs: self.stage.epochs,
            ..self.learner.clone()
        }
    }

    pub fn design(&self, k: usize) -> Result<SaltelliDesign> {
        SaltelliDesign::new(k, self.n_base, true)
    }
}

/// Source of the curriculum used by a staged run.
#[derive(Debug, Clone, PartialEq)]
pub enum CurriculumSource {
    /// Built from sensitivity analysis of the initial data.
    Sensitivity,
    /// Random permutation of singleton stages, drawn from the run seed.
    Random,
    Fixed(Curriculum),
}

/// Trained model, aggregate data and report of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub model: PolicyModel,
    pub dataset: Dataset,
    pub report: RunReport,
    pub sensitivity: Option<SensitivityReport>,
}

pub(crate) struct TrialSink<'a> {
    env: &'a dyn Environment,
    seed: u64,
    next_id: u64,
    pub(crate) evaluations: usize,
}

impl<'a> TrialSink<'a> {
    fn new(env: &'a dyn Environment, seed: u64) -> Self {
        Self {
            env,
            seed,
            next_id: 0,
            evaluations: 0,
        }
    }

    /// Runs one trial with its own rng substream. `choose` picks the action
    /// for the drawn context and returns it with a policy tag.
    pub(crate) fn trial(
        &mut self,
        stage: u32,
        choose: impl FnOnce(
            &Context,
            &mut rand_chacha::ChaCha8Rng,
        ) -> Result<(ActionVector, BinnedAction, String)>,
    ) -> Result<TrialRecord> {
        let id = self.next_id;
        let trial_seed = derive_seed(self.seed, tags::TRIAL, id);
        let mut rng = substream(self.seed, tags::TRIAL, id);
        let pool = self.env.seen_contexts();
        let ctx = &pool[rng.random_range(0..pool.len())];
        let (action, bins, policy) = choose(ctx, &mut rng)?;
        let y = self
            .env
            .evaluate(ctx, &action, &mut rng)
            .map_err(|e| Error::Environment {
                trial: id as usize,
                message: e.to_string(),
            })?;
        self.evaluations += 1;
        let outcome = if y == 0.0 {
            0
        } else if y == 1.0 {
            1
        } else {
            return Err(Error::Environment {
                trial: id as usize,
                message: format!("non-binary outcome {y}"),
            });
        };
        self.next_id += 1;
        Ok(TrialRecord {
            schema_version: DATASET_SCHEMA_VERSION,
            trial_id: id,
            stage,
            context_id: ctx.id.clone(),
            features: ctx.features.clone(),
            action,
            bins,
            outcome,
            policy,
            seed: trial_seed,
        })
    }
}

fn collect_points(
    sink: &mut TrialSink<'_>,
    space: &ControlSpace,
    points: &[Vec<f64>],
    policy: &str,
) -> Result<Dataset> {
    let mut ds = Dataset::new();
    for p in points {
        let rec = sink.trial(0, |_, _| {
            let action = space.from_unit(p)?;
            let bins = space.bin_of(&action)?;
            Ok((action, bins, policy.to_string()))
        })?;
        ds.push(rec)?;
    }
    Ok(ds)
}

/// One trial per design row, in row order, on contexts drawn from the seen pool.
pub fn collect_initial(
    env: &dyn Environment,
    space: &ControlSpace,
    design: &SaltelliDesign,
    seed: u64,
) -> Result<Dataset> {
    if design.dimension() != space.len() {
        return Err(Error::Shape {
            what: "design dimension",
            expected: space.len(),
            found: design.dimension(),
        });
    }
    collect_points(
        &mut TrialSink::new(env, seed),
        space,
        design.rows(),
        "sobol",
    )
}

/// Raw outputs of a (typically deterministic) environment on each design row.
pub fn evaluate_design(
    env: &dyn Environment,
    design: &SaltelliDesign,
    seed: u64,
) -> Result<Vec<f64>> {
    let space = env.space();
    let ctx = &env.seen_contexts()[0];
    design
        .rows()
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let action = space.from_unit(row)?;
            let mut rng = substream(seed, tags::TRIAL, r as u64);
            env.evaluate(ctx, &action, &mut rng)
                .map_err(|e| Error::Environment {
                    trial: r,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Greedy success rate of `model` on `contexts`, `trials` attempts each.
/// The rng substreams depend only on the seed and the (context, trial) index,
/// so different models face the same draws.
pub fn evaluate(
    model: &PolicyModel,
    env: &dyn Environment,
    contexts: &[Context],
    trials: usize,
    seed: u64,
) -> Result<StageEval> {
    if contexts.is_empty() || trials == 0 {
        return Err(Error::param(
            "evaluation needs contexts and at least one trial",
        ));
    }
    let space = env.space();
    let mut successes = 0.0;
    let mut expected = Some(0.0);
    let mut n = 0usize;
    for (c, ctx) in contexts.iter().enumerate() {
        let p = model.predict(ctx)?;
        for t in 0..trials {
            let mut rng = substream(seed, tags::EVAL, ((c as u64) << 32) | t as u64);
            let bins = BinnedAction(
                (0..space.len())
                    .map(|i| select_greedy(&p, i, &mut rng))
                    .collect(),
            );
            let action = space.center_of(&bins)?;
            successes += env.evaluate(ctx, &action, &mut rng)?;
            expected = match (expected, env.success_probability(ctx, &action)) {
                (Some(e), Some(q)) => Some(e + q),
                _ => None,
            };
            n += 1;
        }
    }
    Ok(StageEval {
        rate: successes / n as f64,
        expected: expected.map(|e| e / n as f64),
        trials: n,
    })
}

fn fresh_model(env: &dyn Environment, cfg: &RunConfig) -> Result<PolicyModel> {
    PolicyModel::new(env.space().bin_counts(), env.feature_len(), cfg.learner())
}

fn checkpoint(
    model: &PolicyModel,
    env: &dyn Environment,
    cfg: &RunConfig,
    stage: usize,
    report: &mut RunReport,
) -> Result<()> {
    if !cfg.evaluate_checkpoints {
        return Ok(());
    }
    let trials = cfg.eval_trials_per_context;
    let seen = evaluate(model, env, env.seen_contexts(), trials, cfg.seed)?;
    let novel = evaluate(model, env, env.novel_contexts(), trials, cfg.seed)?;
    report.evaluation_trials += seen.trials + novel.trials;
    report
        .checkpoints
        .push(report::Checkpoint { stage, seen, novel });
    Ok(())
}

/// Full curriculum run with the curriculum taken from sensitivity analysis.
pub fn train_cassl(env: &dyn Environment, cfg: &RunConfig) -> Result<RunOutput> {
    run_curriculum(env, cfg, CurriculumSource::Sensitivity, "cassl")
}

/// Staged curriculum run with a configurable curriculum source.
pub fn run_curriculum(
    env: &dyn Environment,
    cfg: &RunConfig,
    source: CurriculumSource,
    method: &str,
) -> Result<RunOutput> {
    cfg.validate()?;
    let space = env.space();
    let k = space.len();
    let design = cfg.design(k)?;
    let mut sink = TrialSink::new(env, cfg.seed);
    let d0 = collect_points(&mut sink, space, design.rows(), "sobol")?;

    let (curriculum, sensitivity) = match source {
        CurriculumSource::Sensitivity => {
            let rep = analyze_dataset(space, &design, &d0)?;
            (build_curriculum(&rep)?, Some(rep))
        }
        CurriculumSource::Random => {
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut substream(cfg.seed, tags::CURRICULUM, 0));
            (Curriculum::singletons(&order)?, None)
        }
        CurriculumSource::Fixed(c) => {
            c.validate(k)?;
            (c, None)
        }
    };

    let mut report = RunReport::new(method, cfg, space);
    report.set_curriculum(&curriculum, space);
    report.collection_success.push(d0.success_rate());

    let mut model = fresh_model(env, cfg)?.fit(
        &d0,
        &vec![1.0; d0.len()],
        derive_seed(cfg.seed, tags::FIT, 0),
    )?;
    let mut data = d0;
    checkpoint(&model, env, cfg, 0, &mut report)?;

    for stage in 1..=curriculum.num_stages() {
        let mut dk = Dataset::new();
        for _ in 0..cfg.stage.samples_per_stage {
            let rec = sink.trial(stage as u32, |ctx, rng| {
                let a = stage_action(&model, &curriculum, stage, ctx, &cfg.stage, space, rng)?;
                Ok((a.action, a.bins, a.policy))
            })?;
            dk.push(rec)?;
        }
        report.collection_success.push(dk.success_rate());
        let agg = aggregate_and_train(
            &model,
            &fresh_model(env, cfg)?,
            &data,
            &dk,
            &cfg.stage,
            derive_seed(cfg.seed, tags::FIT, stage as u64),
        )?;
        model = agg.model;
        data = agg.dataset;
        checkpoint(&model, env, cfg, stage, &mut report)?;
    }
    report.training_evaluations = sink.evaluations;
    Ok(RunOutput {
        model,
        dataset: data,
        report,
        sensitivity,
    })
}

/// Uniform random actions for the whole budget, one fit at the end.
pub fn train_random_baseline(
    env: &dyn Environment,
    cfg: &RunConfig,
    total_budget: usize,
) -> Result<RunOutput> {
    cfg.validate()?;
    if total_budget == 0 {
        return Err(Error::param("random baseline needs a positive budget"));
    }
    let space = env.space();
    let mut sink = TrialSink::new(env, cfg.seed);
    let mut data = Dataset::new();
    for _ in 0..total_budget {
        let rec = sink.trial(0, |_, rng| {
            let u: Vec<f64> = (0..space.len()).map(|_| rng.random::<f64>()).collect();
            let action = space.from_unit(&u)?;
            let bins = space.bin_of(&action)?;
            Ok((action, bins, "random".to_string()))
        })?;
        data.push(rec)?;
    }
    let mut report = RunReport::new("random", cfg, space);
    report.collection_success.push(data.success_rate());
    let model = fresh_model(env, cfg)?.fit(
        &data,
        &vec![1.0; data.len()],
        derive_seed(cfg.seed, tags::FIT, 0),
    )?;
    checkpoint(&model, env, cfg, 0, &mut report)?;
    report.training_evaluations = sink.evaluations;
    Ok(RunOutput {
        model,
        dataset: data,
        report,
        sensitivity: None,
    })
}

/// Staged self-supervision without a curriculum: quasi-random stage 0, then
/// ε_post-greedy collection over all dimensions with the latest model.
/// Stage 0 uses the Saltelli design when `budgets[0]` equals its size, and the
/// first `budgets[0]` Sobol points otherwise.
pub fn train_staged_baseline(
    env: &dyn Environment,
    cfg: &RunConfig,
    budgets: &[usize],
) -> Result<RunOutput> {
    cfg.validate()?;
    if budgets.is_empty() || budgets.contains(&0) {
        return Err(Error::param("staged baseline budgets must be positive"));
    }
    let space = env.space();
    let k = space.len();
    let design = cfg.design(k)?;
    let points = if budgets[0] == design.len() {
        design.rows().to_vec()
    } else {
        sobol_points(k, budgets[0])?
    };
    let mut sink = TrialSink::new(env, cfg.seed);
    let d0 = collect_points(&mut sink, space, &points, "sobol")?;
    let mut report = RunReport::new("staged", cfg, space);
    report.collection_success.push(d0.success_rate());
    let mut model = fresh_model(env, cfg)?.fit(
        &d0,
        &vec![1.0; d0.len()],
        derive_seed(cfg.seed, tags::FIT, 0),
    )?;
    let mut data = d0;
    checkpoint(&model, env, cfg, 0, &mut report)?;
    for (stage, &budget) in budgets.iter().enumerate().skip(1) {
        let mut dk = Dataset::new();
        for _ in 0..budget {
            let rec = sink.trial(stage as u32, |ctx, rng| {
                let p = model.predict(ctx)?;
                let mut bins = Vec::with_capacity(k);
                let mut tag = String::with_capacity(k);
                for i in 0..k {
                    let (b, choice) = select_with(&p, i, Some(cfg.stage.eps_post), rng)?;
                    bins.push(b);
                    tag.push(choice.tag());
                }
                let bins = BinnedAction(bins);
                Ok((space.center_of(&bins)?, bins, tag))
            })?;
            dk.push(rec)?;
        }
        report.collection_success.push(dk.success_rate());
        let agg = aggregate_and_train(
            &model,
            &fresh_model(env, cfg)?,
            &data,
            &dk,
            &cfg.stage,
            derive_seed(cfg.seed, tags::FIT, stage as u64),
        )?;
        model = agg.model;
        data = agg.dataset;
        checkpoint(&model, env, cfg, stage, &mut report)?;
    }
    report.training_evaluations = sink.evaluations;
    Ok(RunOutput {
        model,
        dataset: data,
        report,
        sensitivity: None,
    })
}

/// Splits `total` into budgets proportional to `weights`, with the first
/// budget pinned to `first` and the remainder split over the rest by largest
/// remainder.
pub fn proportional_budgets(total: usize, first: usize, weights: &[f64]) -> Result<Vec<usize>> {
    if weights.is_empty() || first > total {
        return Err(Error::param("invalid budget split"));
    }
    let rest = total - first;
    let tail = &weights[1..];
    let sum: f64 = tail.iter().sum();
    let raw: Vec<f64> = tail.iter().map(|w| rest as f64 * w / sum).collect();
    let mut out: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut left = rest - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    let mut budgets = vec![first];
    budgets.extend(out);
    Ok(budgets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_split() {
        // 448 quasi-random, remaining 768 split 2796:350
        let b = proportional_budgets(1216, 448, &[1960.0, 2796.0, 350.0]).unwrap();
        assert_eq!(b.iter().sum::<usize>(), 1216);
        assert_eq!(b, vec![448, 683, 85]);
    }

    #[test]
    fn stage_config_validation() {
        let bad = StageConfig {
            eps_pre: 1.2,
            ..StageConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = StageConfig {
            new_data_weight: 0.0,
            ..StageConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(StageConfig::default().validate().is_ok());
    }
}

use rand::Rng;

use super::{AggregationMode, StageConfig};
use crate::curriculum::Curriculum;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::{select_with, Choice, Context, PolicyModel};
use crate::space::{ActionVector, BinnedAction, ControlSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct StagePolicyAction {
    pub action: ActionVector,
    pub bins: BinnedAction,
    pub choices: Vec<Choice>,
    /// One tag character per dimension (`G`, `R` or `U`).
    pub policy: String,
}

/// Action for curriculum stage `stage` (1-based): dimensions of earlier
/// stages are ε_post-greedy, the current stage's dimensions uncertainty
/// sampled, later stages ε_pre-greedy. Bins map to their centres.
pub fn stage_action<R: Rng + ?Sized>(
    model: &PolicyModel,
    curriculum: &Curriculum,
    stage: usize,
    context: &Context,
    cfg: &StageConfig,
    space: &ControlSpace,
    rng: &mut R,
) -> Result<StagePolicyAction> {
    if !model.is_trained() {
        return Err(Error::State("stage policy needs a trained model".into()));
    }
    if stage == 0 || stage > curriculum.num_stages() {
        return Err(Error::param(format!(
            "stage {stage} outside 1..={}",
            curriculum.num_stages()
        )));
    }
    let p = model.predict(context)?;
    let stage_of = curriculum.stage_of();
    let current = stage - 1;
    let mut bins = Vec::with_capacity(space.len());
    let mut choices = Vec::with_capacity(space.len());
    for (i, &s) in stage_of.iter().enumerate() {
        let eps = match s.cmp(&current) {
            std::cmp::Ordering::Less => Some(cfg.eps_post),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(cfg.eps_pre),
        };
        let (b, c) = select_with(&p, i, eps, rng)?;
        bins.push(b);
        choices.push(c);
    }
    let bins = BinnedAction(bins);
    Ok(StagePolicyAction {
        action: space.center_of(&bins)?,
        policy: choices.iter().map(|c| c.tag()).collect(),
        bins,
        choices,
    })
}

/// Per-record weights for `n_prev` old records followed by `n_new` new ones.
/// New records together carry `ratio` times the mass of the old ones, and the
/// weights are scaled so that their mean is one. With no old records every
/// weight is one.
pub fn aggregation_weights(n_prev: usize, n_new: usize, ratio: f64) -> Vec<f64> {
    if n_prev == 0 {
        return vec![1.0; n_new];
    }
    let new_w = ratio * n_prev as f64 / n_new as f64;
    let scale = (n_prev + n_new) as f64 / (n_prev as f64 * (1.0 + ratio));
    let mut w = vec![scale; n_prev];
    w.extend(std::iter::repeat(new_w * scale).take(n_new));
    w
}

#[derive(Debug, Clone)]
pub struct Aggregated {
    pub model: PolicyModel,
    /// `D_prev ∪ d_k`.
    pub dataset: Dataset,
    /// Weights the model was trained with, aligned with the training set
    /// (which repeats new records in duplication mode).
    pub weights: Vec<f64>,
}

/// Aggregates `d_new` into `d_prev` and retrains. `model` is the previous
/// stage's model, `fresh` an untrained template used when warm starts are
/// disabled.
pub fn aggregate_and_train(
    model: &PolicyModel,
    fresh: &PolicyModel,
    d_prev: &Dataset,
    d_new: &Dataset,
    cfg: &StageConfig,
    seed: u64,
) -> Result<Aggregated> {
    if d_new.is_empty() {
        return Err(Error::param("new stage dataset is empty"));
    }
    let mut dataset = d_prev.clone();
    dataset.extend(d_new)?;
    let base = if cfg.warm_start { model } else { fresh };
    let (train, weights) = match cfg.aggregation {
        AggregationMode::Weighted => {
            let w = aggregation_weights(d_prev.len(), d_new.len(), cfg.new_data_weight);
            (dataset.clone(), w)
        }
        AggregationMode::Duplicate => {
            let w = aggregation_weights(d_prev.len(), d_new.len(), cfg.new_data_weight);
            let per = if d_prev.is_empty() {
                1.0
            } else {
                w[d_prev.len()] / w[0]
            };
            let copies = (per.round() as usize).max(1);
            let mut train = d_prev.clone();
            for _ in 0..copies {
                train.extend(d_new)?;
            }
            let n = train.len();
            (train, vec![1.0; n])
        }
    };
    let model = base.fit(&train, &weights, seed)?;
    Ok(Aggregated {
        model,
        dataset,
        weights,
    })
}

use std::sync::atomic::{AtomicUsize, Ordering};

use cassl_core::curriculum::Curriculum;
use cassl_core::env::{SyntheticGrasp, SyntheticGraspSpec};
use cassl_core::learner::{ModelParams, TabularParams};
use cassl_core::pipeline::{
    aggregate_and_train, collect_initial, proportional_budgets, run_curriculum, stage_action,
    train_random_baseline, train_staged_baseline, AggregationMode, CurriculumSource,
};
use cassl_core::{
    ActionVector, Context, ControlSpace, Dataset, Environment, Error, PolicyModel, Result,
    RunConfig, SaltelliDesign, StageConfig,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Forwards to an inner environment and counts evaluations.
struct Counting {
    inner: SyntheticGrasp,
    calls: AtomicUsize,
}

impl Counting {
    fn new() -> Self {
        Self {
            inner: SyntheticGrasp::new(SyntheticGraspSpec::tabletop_6d()).unwrap(),
            calls: AtomicUsize::new(0),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Environment for Counting {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn space(&self) -> &ControlSpace {
        self.inner.space()
    }
    fn feature_len(&self) -> usize {
        self.inner.feature_len()
    }
    fn seen_contexts(&self) -> &[Context] {
        self.inner.seen_contexts()
    }
    fn novel_contexts(&self) -> &[Context] {
        self.inner.novel_contexts()
    }
    fn evaluate(&self, c: &Context, a: &ActionVector, rng: &mut dyn RngCore) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.evaluate(c, a, rng)
    }
    fn is_deterministic(&self) -> bool {
        false
    }
}

fn tabletop() -> SyntheticGrasp {
    SyntheticGrasp::new(SyntheticGraspSpec::tabletop_6d()).unwrap()
}

fn desk(seed: u64) -> RunConfig {
    RunConfig {
        seed,
        ..RunConfig::default()
    }
}

#[test]
fn training_budget_is_exact() {
    let env = Counting::new();
    let cfg = RunConfig {
        evaluate_checkpoints: false,
        ..desk(3)
    };
    let out = run_curriculum(&env, &cfg, CurriculumSource::Sensitivity, "cassl").unwrap();
    let stages = out.report.curriculum.len();
    let want = 448 + stages * 128;
    assert_eq!(env.calls(), want);
    assert_eq!(out.report.training_evaluations, want);
    assert_eq!(out.dataset.len(), want);
    assert_eq!(out.report.evaluation_trials, 0);

    // checkpoint evaluations are reported separately
    let env = Counting::new();
    let out = run_curriculum(&env, &desk(3), CurriculumSource::Sensitivity, "cassl").unwrap();
    assert_eq!(out.report.training_evaluations, want);
    assert_eq!(env.calls(), want + out.report.evaluation_trials);
    assert_eq!(out.report.evaluation_trials, (stages + 1) * 2 * 10 * 5);
}

#[test]
fn baselines_spend_their_budget() {
    let env = Counting::new();
    let cfg = RunConfig {
        evaluate_checkpoints: false,
        ..desk(4)
    };
    let out = train_random_baseline(&env, &cfg, 1216).unwrap();
    assert_eq!(out.report.training_evaluations, 1216);
    assert_eq!(env.calls(), 1216);

    let env = Counting::new();
    let budgets = proportional_budgets(1216, 448, &[1960.0, 2796.0, 350.0]).unwrap();
    let out = train_staged_baseline(&env, &cfg, &budgets).unwrap();
    assert_eq!(out.report.training_evaluations, 1216);
    assert_eq!(env.calls(), 1216);
}

#[test]
fn full_scale_budget_split_is_preserved() {
    let b = proportional_budgets(1960 + 2796 + 350, 1960, &[1960.0, 2796.0, 350.0]).unwrap();
    assert_eq!(b, vec![1960, 2796, 350]);
}

#[test]
fn runs_are_reproducible() {
    let env = tabletop();
    let a = run_curriculum(&env, &desk(7), CurriculumSource::Sensitivity, "cassl").unwrap();
    let b = run_curriculum(&env, &desk(7), CurriculumSource::Sensitivity, "cassl").unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.report, b.report);
    assert_eq!(a.model, b.model);
    let jsonl = |d: &Dataset| {
        let mut v = Vec::new();
        d.write_jsonl(&mut v).unwrap();
        v
    };
    assert_eq!(jsonl(&a.dataset), jsonl(&b.dataset));
    assert_eq!(
        serde_json::to_vec(&a.report).unwrap(),
        serde_json::to_vec(&b.report).unwrap()
    );
    let c = run_curriculum(&env, &desk(8), CurriculumSource::Sensitivity, "cassl").unwrap();
    assert_ne!(a.dataset, c.dataset);
}

#[test]
fn initial_collection_sizes() {
    let env = tabletop();
    for (n, rows) in [(32, 448), (140, 1960)] {
        let design = SaltelliDesign::new(6, n, true).unwrap();
        let ds = collect_initial(&env, env.space(), &design, 1).unwrap();
        assert_eq!(ds.len(), rows);
        assert!(ds
            .records()
            .iter()
            .all(|r| r.stage == 0 && r.policy == "sobol"));
        let again = collect_initial(&env, env.space(), &design, 1).unwrap();
        assert_eq!(ds, again);
    }
}

fn trained_model(env: &SyntheticGrasp) -> PolicyModel {
    let design = SaltelliDesign::new(6, 32, true).unwrap();
    let d0 = collect_initial(env, env.space(), &design, 2).unwrap();
    let cfg = desk(0);
    PolicyModel::new(env.space().bin_counts(), env.feature_len(), cfg.learner)
        .unwrap()
        .fit(&d0, &vec![1.0; d0.len()], 0)
        .unwrap()
}

#[test]
fn exploration_decreases_with_stage_position() {
    let env = tabletop();
    let model = trained_model(&env);
    let curriculum = Curriculum::singletons(&[0, 1, 2, 3, 4, 5]).unwrap();
    let cfg = StageConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draws = 20_000;
    let mut random = [0usize; 6];
    for t in 0..draws {
        let ctx = &env.seen_contexts()[t % 10];
        let a = stage_action(&model, &curriculum, 3, ctx, &cfg, env.space(), &mut rng).unwrap();
        for (i, tag) in a.policy.chars().enumerate() {
            match i {
                2 => assert_eq!(tag, 'U'),
                _ => random[i] += usize::from(tag == 'R'),
            }
        }
        assert_eq!(env.space().bin_of(&a.action).unwrap(), a.bins);
    }
    let frac = |i: usize| random[i] as f64 / draws as f64;
    for i in [0, 1] {
        assert!((frac(i) - 0.15).abs() < 0.01, "past dim {i}: {}", frac(i));
    }
    for i in [3, 4, 5] {
        assert!((frac(i) - 0.7).abs() < 0.01, "future dim {i}: {}", frac(i));
    }
}

#[test]
fn last_stage_is_mostly_greedy() {
    let env = tabletop();
    let model = trained_model(&env);
    let curriculum = Curriculum::singletons(&[3, 0, 5, 4, 1, 2]).unwrap();
    let cfg = StageConfig {
        eps_pre: 0.0,
        eps_post: 0.0,
        ..StageConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ctx = &env.seen_contexts()[0];
    let a = stage_action(&model, &curriculum, 6, ctx, &cfg, env.space(), &mut rng).unwrap();
    assert_eq!(a.policy, "GGUGGG");
}

#[test]
fn stage_action_errors() {
    let env = tabletop();
    let cfg = desk(0);
    let untrained =
        PolicyModel::new(env.space().bin_counts(), env.feature_len(), cfg.learner).unwrap();
    let curriculum = Curriculum::singletons(&[0, 1, 2, 3, 4, 5]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ctx = &env.seen_contexts()[0];
    let r = stage_action(
        &untrained,
        &curriculum,
        1,
        ctx,
        &cfg.stage,
        env.space(),
        &mut rng,
    );
    assert!(matches!(r, Err(Error::State(_))));
    let model = trained_model(&env);
    for stage in [0, 7] {
        let r = stage_action(
            &model,
            &curriculum,
            stage,
            ctx,
            &cfg.stage,
            env.space(),
            &mut rng,
        );
        assert!(matches!(r, Err(Error::Parameter(_))));
    }
}

/// With ε = 1 everywhere, every dimension outside the current stage is chosen
/// uniformly over its bins.
#[test]
fn full_exploration_is_uniform_over_bins() {
    let env = tabletop();
    let cfg = RunConfig {
        evaluate_checkpoints: false,
        stage: StageConfig {
            eps_pre: 1.0,
            eps_post: 1.0,
            samples_per_stage: 4000,
            ..StageConfig::default()
        },
        ..desk(21)
    };
    let curriculum = Curriculum::singletons(&[3, 0, 1, 2, 4, 5]).unwrap();
    let out = run_curriculum(&env, &cfg, CurriculumSource::Fixed(curriculum), "fixed").unwrap();
    let stage1: Vec<_> = out
        .dataset
        .records()
        .iter()
        .filter(|r| r.stage == 1)
        .collect();
    assert_eq!(stage1.len(), 4000);
    let counts = env.space().bin_counts();
    for (i, &n) in counts.iter().enumerate() {
        if i == 3 {
            assert!(stage1.iter().all(|r| r.policy.as_bytes()[3] == b'U'));
            continue;
        }
        let mut hist = vec![0.0; n];
        for r in &stage1 {
            hist[r.bins.0[i]] += 1.0;
        }
        let expected = stage1.len() as f64 / n as f64;
        let chi2: f64 = hist.iter().map(|o| (o - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new((n - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 1e-3, "dim {i}: chi2 {chi2} p {p}");
    }
}

fn labelled(env: &SyntheticGrasp, n: usize, seed: u64) -> Dataset {
    let design = SaltelliDesign::new(6, n, true).unwrap();
    collect_initial(env, env.space(), &design, seed).unwrap()
}

#[test]
fn aggregation_mass_ratio() {
    let env = tabletop();
    let cfg = desk(0);
    let fresh = PolicyModel::new(
        env.space().bin_counts(),
        env.feature_len(),
        cfg.learner.clone(),
    )
    .unwrap();
    let d_prev = labelled(&env, 32, 1);
    let model = fresh.fit(&d_prev, &vec![1.0; d_prev.len()], 0).unwrap();
    let d_new = labelled(&env, 8, 2);
    let agg = aggregate_and_train(&model, &fresh, &d_prev, &d_new, &cfg.stage, 0).unwrap();
    assert_eq!(agg.dataset.len(), d_prev.len() + d_new.len());
    let old: f64 = agg.weights[..d_prev.len()].iter().sum();
    let new: f64 = agg.weights[d_prev.len()..].iter().sum();
    assert!((new / old - 2.5).abs() < 1e-9, "{}", new / old);
    assert!(matches!(
        aggregate_and_train(&model, &fresh, &d_prev, &Dataset::new(), &cfg.stage, 0),
        Err(Error::Parameter(_))
    ));

    // equal sizes with weight 1 is a plain union
    let unit = StageConfig {
        new_data_weight: 1.0,
        ..StageConfig::default()
    };
    let same = labelled(&env, 32, 3);
    let agg = aggregate_and_train(&model, &fresh, &d_prev, &same, &unit, 0).unwrap();
    assert!(agg.weights.iter().all(|&w| (w - 1.0).abs() < 1e-12));
}

fn tabular(m: &PolicyModel) -> &TabularParams {
    match &m.params {
        ModelParams::Tabular(t) => t,
        _ => panic!("expected a tabular model"),
    }
}

#[test]
fn repeated_data_splits_counts_by_the_mass_ratio() {
    let env = tabletop();
    let cfg = desk(0);
    let fresh = PolicyModel::new(
        env.space().bin_counts(),
        env.feature_len(),
        cfg.learner.clone(),
    )
    .unwrap();
    let d = labelled(&env, 16, 5);
    let once = fresh.fit(&d, &vec![1.0; d.len()], 0).unwrap();
    let agg = aggregate_and_train(&once, &fresh, &d, &d, &cfg.stage, 0).unwrap();
    let (w_old, w_new) = (agg.weights[0], agg.weights[d.len()]);
    assert!((w_new / w_old - 2.5).abs() < 1e-12);
    let (a, b) = (tabular(&once), tabular(&agg.model));
    for (x, y) in a
        .successes
        .iter()
        .flatten()
        .flatten()
        .zip(b.successes.iter().flatten().flatten())
    {
        assert!((y - x * (w_old + w_new)).abs() < 1e-9);
    }

    // duplication mode repeats the new records with unit weights
    let dup = StageConfig {
        aggregation: AggregationMode::Duplicate,
        ..cfg.stage.clone()
    };
    let agg = aggregate_and_train(&once, &fresh, &d, &d, &dup, 0).unwrap();
    assert_eq!(agg.weights.len(), d.len() * 4);
    assert!(agg.weights.iter().all(|&w| w == 1.0));
}

#[test]
fn random_curriculum_is_a_seeded_permutation() {
    let env = tabletop();
    let cfg = RunConfig {
        evaluate_checkpoints: false,
        ..desk(9)
    };
    let a = run_curriculum(&env, &cfg, CurriculumSource::Random, "random-curriculum").unwrap();
    let b = run_curriculum(&env, &cfg, CurriculumSource::Random, "random-curriculum").unwrap();
    assert_eq!(a.report.flat_order, b.report.flat_order);
    assert_eq!(a.report.curriculum.len(), 6);
    let mut names = a.report.flat_order.clone();
    names.sort();
    let mut want = env.space().names();
    want.sort();
    assert_eq!(names, want);
    assert!(a.sensitivity.is_none());
}

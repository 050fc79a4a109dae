use cassl_core::learner::{select_uncertain, LogisticParams, ModelParams, SCORE_TIE};
use cassl_core::{
    ActionVector, BinProbabilities, BinnedAction, Context, Dataset, LearnerConfig, LearnerKind,
    PolicyModel, TrialRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(id: u64, features: Vec<f64>, bins: Vec<usize>, outcome: u8) -> TrialRecord {
    TrialRecord {
        schema_version: 1,
        trial_id: id,
        stage: 0,
        context_id: format!("c{id}"),
        features,
        action: ActionVector(vec![0.0; bins.len()]),
        bins: BinnedAction(bins),
        outcome,
        policy: "test".into(),
        seed: id,
    }
}

fn logistic(bins: Vec<usize>, features: usize, epochs: usize) -> PolicyModel {
    let cfg = LearnerConfig {
        kind: LearnerKind::LinearLogistic,
        cluster_features: 0,
        epochs,
        ..LearnerConfig::default()
    };
    PolicyModel::new(bins, features, cfg).unwrap()
}

fn random_records(rng: &mut ChaCha8Rng, n: usize, bins: &[usize], f: usize) -> Vec<TrialRecord> {
    (0..n as u64)
        .map(|id| {
            let x = (0..f).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = bins.iter().map(|&m| rng.random_range(0..m)).collect();
            record(id, x, b, rng.random_range(0..2))
        })
        .collect()
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let bins = vec![4, 3];
    let f = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // bin 3 of dim 0 and bin 2 of dim 1 are never executed
    let records: Vec<TrialRecord> = random_records(&mut rng, 40, &[3, 2], f);
    let weights: Vec<f64> = (0..records.len())
        .map(|_| rng.random_range(0.5..3.0))
        .collect();
    for _point in 0..5 {
        let params = LogisticParams {
            weights: bins
                .iter()
                .map(|&n| {
                    (0..n)
                        .map(|_| (0..=f).map(|_| rng.random_range(-2.0..2.0)).collect())
                        .collect()
                })
                .collect(),
        };
        let (_, grad) = params.loss_and_gradient(&records, &weights);
        for (i, &n) in bins.iter().enumerate() {
            for b in 0..n {
                for k in 0..=f {
                    let g = grad[i][b][k];
                    let executed = b < n - 1;
                    if !executed {
                        assert_eq!(g, 0.0, "cell ({i},{b},{k})");
                        continue;
                    }
                    let h = 1e-6;
                    let mut plus = params.clone();
                    plus.weights[i][b][k] += h;
                    let mut minus = params.clone();
                    minus.weights[i][b][k] -= h;
                    let fd = (plus.loss_and_gradient(&records, &weights).0
                        - minus.loss_and_gradient(&records, &weights).0)
                        / (2.0 * h);
                    let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
                    assert!(rel < 1e-4, "cell ({i},{b},{k}): analytic {g} numeric {fd}");
                }
            }
        }
    }
}

#[test]
fn logistic_separates_toy_data() {
    // one dimension, two bins; success iff the feature is positive on bin 0
    // and negative on bin 1
    let mut ds = Dataset::new();
    for id in 0..2000u64 {
        let x = if id % 2 == 0 { 1.0 } else { -1.0 };
        let bin = (id / 2 % 2) as usize;
        let y = u8::from((x > 0.0) == (bin == 0));
        ds.push(record(id, vec![x], vec![bin], y)).unwrap();
    }
    let w = vec![1.0; ds.len()];
    let model = logistic(vec![2], 1, 200).fit(&ds, &w, 1).unwrap();
    let loss = model.training_loss(&ds, &w).unwrap();
    assert!(loss < 0.1, "loss {loss}");
    let p = model.predict(&Context::new("pos", vec![1.0])).unwrap();
    assert!(p.dim(0)[0] > 0.9 && p.dim(0)[1] < 0.1);
}

#[test]
fn fit_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ds = Dataset::new();
    for r in random_records(&mut rng, 300, &[5, 4], 2) {
        ds.push(r).unwrap();
    }
    let w: Vec<f64> = (0..ds.len()).map(|i| 1.0 + (i % 3) as f64).collect();
    let a = logistic(vec![5, 4], 2, 5).fit(&ds, &w, 77).unwrap();
    let b = logistic(vec![5, 4], 2, 5).fit(&ds, &w, 77).unwrap();
    assert_eq!(a, b);
    let tab = PolicyModel::new(vec![5, 4], 2, LearnerConfig::default()).unwrap();
    assert_eq!(tab.fit(&ds, &w, 1).unwrap(), tab.fit(&ds, &w, 2).unwrap());
}

#[test]
fn tabular_counts_of_unexecuted_bins_are_untouched() {
    let model = PolicyModel::new(vec![3, 3], 2, LearnerConfig::default()).unwrap();
    let mut ds = Dataset::new();
    ds.push(record(0, vec![1.0, 0.0], vec![0, 2], 1)).unwrap();
    ds.push(record(1, vec![1.0, 0.0], vec![1, 2], 0)).unwrap();
    let fitted = model.fit(&ds, &[1.0, 2.5], 0).unwrap();
    let ModelParams::Tabular(t) = &fitted.params else {
        panic!("tabular")
    };
    assert_eq!(t.successes[0][0], vec![1.0, 0.0, 0.0]);
    assert_eq!(t.failures[0][0], vec![0.0, 2.5, 0.0]);
    assert_eq!(t.successes[0][1], vec![0.0, 0.0, 1.0]);
    assert_eq!(t.failures[0][1], vec![0.0, 0.0, 2.5]);
    // the other cluster saw nothing
    assert!(t.successes[1]
        .iter()
        .chain(&t.failures[1])
        .flatten()
        .all(|&c| c == 0.0));
}

#[test]
fn uncertainty_selection_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let n = rng.random_range(1..30);
        let row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let p = BinProbabilities {
            probs: vec![row.clone()],
        };
        let j = select_uncertain(&p, 0, &mut rng);
        let best = row
            .iter()
            .map(|q| (q - 0.5).abs())
            .fold(f64::INFINITY, f64::min);
        assert!((row[j] - 0.5).abs() <= best + SCORE_TIE);
    }
}

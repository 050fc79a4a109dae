use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnerConfig;
use crate::dataset::TrialRecord;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-log σ(z)` for y = 1 or `-log(1 - σ(z))` for y = 0, without overflow.
fn cross_entropy(z: f64, y: f64) -> f64 {
    // softplus(z) - y*z
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - y * z
}

/// One weight row per (dimension, bin); the last entry of each row is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub weights: Vec<Vec<Vec<f64>>>,
}

impl LogisticParams {
    pub(crate) fn zeros(bins: &[usize], feature_len: usize) -> Self {
        Self {
            weights: bins
                .iter()
                .map(|&n| vec![vec![0.0; feature_len + 1]; n])
                .collect(),
        }
    }

    fn logit(row: &[f64], x: &[f64]) -> f64 {
        let (bias, w) = row.split_last().expect("row has a bias");
        w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + bias
    }

    pub(crate) fn predict(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .map(|dim| dim.iter().map(|row| sigmoid(Self::logit(row, x))).collect())
            .collect()
    }

    /// Summed weighted cross-entropy over executed cells and its gradient.
    /// Cells of bins a record did not execute receive no contribution.
    pub fn loss_and_gradient(
        &self,
        records: &[TrialRecord],
        weights: &[f64],
    ) -> (f64, Vec<Vec<Vec<f64>>>) {
        let mut grad: Vec<Vec<Vec<f64>>> = self
            .weights
            .iter()
            .map(|d| d.iter().map(|r| vec![0.0; r.len()]).collect())
            .collect();
        let mut loss = 0.0;
        for (r, &w) in records.iter().zip(weights) {
            let y = f64::from(r.outcome);
            for (i, &b) in r.bins.0.iter().enumerate() {
                let z = Self::logit(&self.weights[i][b], &r.features);
                loss += w * cross_entropy(z, y);
                let g = w * (sigmoid(z) - y);
                let cell = &mut grad[i][b];
                let (bias, rest) = cell.split_last_mut().expect("row has a bias");
                for (gk, xk) in rest.iter_mut().zip(&r.features) {
                    *gk += g * xk;
                }
                *bias += g;
            }
        }
        (loss, grad)
    }

    /// Minibatch gradient descent on the summed loss.
    pub(crate) fn train(
        &mut self,
        records: &[TrialRecord],
        weights: &[f64],
        cfg: &LearnerConfig,
        seed: u64,
    ) {
        let n = records.len();
        let batch = cfg.batch_size.unwrap_or(n).min(n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut batch_recs = Vec::with_capacity(batch);
        let mut batch_w = Vec::with_capacity(batch);
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                batch_recs.clear();
                batch_w.clear();
                for &i in chunk {
                    batch_recs.push(records[i].clone());
                    batch_w.push(weights[i]);
                }
                let (_, grad) = self.loss_and_gradient(&batch_recs, &batch_w);
                for (wd, gd) in self.weights.iter_mut().zip(&grad) {
                    for (wr, gr) in wd.iter_mut().zip(gd) {
                        for (w, g) in wr.iter_mut().zip(gr) {
                            *w -= cfg.learning_rate * g;
                        }
                    }
                }
            }
        }
    }
}

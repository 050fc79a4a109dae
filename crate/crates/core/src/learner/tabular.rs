use serde::{Deserialize, Serialize};

use crate::dataset::TrialRecord;

/// Weighted success/failure counts per (cluster, dimension, bin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularParams {
    pub successes: Vec<Vec<Vec<f64>>>,
    pub failures: Vec<Vec<Vec<f64>>>,
}

/// Cluster of a context: argmax over its leading one-hot features (first
/// wins on ties), or the single pooled cluster.
pub(crate) fn cluster_of(features: &[f64], cluster_features: usize) -> usize {
    if cluster_features == 0 {
        return 0;
    }
    let mut best = 0;
    for (i, &v) in features[..cluster_features].iter().enumerate() {
        if v > features[best] {
            best = i;
        }
    }
    best
}

impl TabularParams {
    pub(crate) fn new(bins: &[usize], clusters: usize) -> Self {
        let zeros: Vec<Vec<Vec<f64>>> = (0..clusters)
            .map(|_| bins.iter().map(|&n| vec![0.0; n]).collect())
            .collect();
        Self {
            successes: zeros.clone(),
            failures: zeros,
        }
    }

    pub(crate) fn from_records(
        bins: &[usize],
        cluster_features: usize,
        records: &[TrialRecord],
        weights: &[f64],
    ) -> Self {
        let mut t = Self::new(bins, cluster_features.max(1));
        for (r, &w) in records.iter().zip(weights) {
            let c = cluster_of(&r.features, cluster_features);
            let target = if r.outcome == 1 {
                &mut t.successes[c]
            } else {
                &mut t.failures[c]
            };
            for (i, &b) in r.bins.0.iter().enumerate() {
                target[i][b] += w;
            }
        }
        t
    }

    pub(crate) fn predict(
        &self,
        features: &[f64],
        cluster_features: usize,
        (a, b): (f64, f64),
    ) -> Vec<Vec<f64>> {
        let c = cluster_of(features, cluster_features);
        self.successes[c]
            .iter()
            .zip(&self.failures[c])
            .map(|(s, f)| {
                s.iter()
                    .zip(f)
                    .map(|(s, f)| (s + a) / (s + f + a + b))
                    .collect()
            })
            .collect()
    }
}

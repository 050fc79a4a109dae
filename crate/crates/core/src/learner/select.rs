use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BinProbabilities;
use crate::error::{Error, Result};

/// How a bin was picked; recorded per dimension on every trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    Greedy,
    Random,
    Uncertain,
}

impl Choice {
    pub fn tag(self) -> char {
        match self {
            Choice::Greedy => 'G',
            Choice::Random => 'R',
            Choice::Uncertain => 'U',
        }
    }
}

/// Scores within this distance of the best count as ties.
pub const SCORE_TIE: f64 = 1e-12;

/// Index of a best-scoring entry, ties broken uniformly with `rng`.
/// `lowest` selects minimization instead of maximization.
fn pick_best<R: Rng + ?Sized>(scores: &[f64], lowest: bool, rng: &mut R) -> usize {
    let best = if lowest {
        scores.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let ties: Vec<usize> = (0..scores.len())
        .filter(|&j| (scores[j] - best).abs() <= SCORE_TIE)
        .collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// Bin with the largest Bernoulli variance `p(1 - p)`, computed as the
/// smallest `|p - 0.5|` so that the ordering is exact in floating point.
/// Distances within [`SCORE_TIE`] tie.
pub fn select_uncertain<R: Rng + ?Sized>(p: &BinProbabilities, dim: usize, rng: &mut R) -> usize {
    let dist: Vec<f64> = p.dim(dim).iter().map(|q| (q - 0.5).abs()).collect();
    pick_best(&dist, true, rng)
}

pub fn select_greedy<R: Rng + ?Sized>(p: &BinProbabilities, dim: usize, rng: &mut R) -> usize {
    pick_best(p.dim(dim), false, rng)
}

/// Uniform random bin with probability `eps`, otherwise greedy.
pub fn select_eps_greedy<R: Rng + ?Sized>(
    p: &BinProbabilities,
    dim: usize,
    eps: f64,
    rng: &mut R,
) -> Result<usize> {
    select_with(p, dim, Some(eps), rng).map(|(b, _)| b)
}

/// `None` selects by uncertainty, `Some(eps)` by ε-greedy; returns the bin and how it was chosen.
pub fn select_with<R: Rng + ?Sized>(
    p: &BinProbabilities,
    dim: usize,
    eps: Option<f64>,
    rng: &mut R,
) -> Result<(usize, Choice)> {
    let Some(eps) = eps else {
        return Ok((select_uncertain(p, dim, rng), Choice::Uncertain));
    };
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param(format!(
            "epsilon must lie in [0, 1], got {eps}"
        )));
    }
    let explore = if eps == 0.0 {
        false
    } else if eps == 1.0 {
        true
    } else {
        rng.random::<f64>() < eps
    };
    if explore {
        Ok((rng.random_range(0..p.dim(dim).len()), Choice::Random))
    } else {
        Ok((select_greedy(p, dim, rng), Choice::Greedy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probs(row: &[f64]) -> BinProbabilities {
        BinProbabilities {
            probs: vec![row.to_vec()],
        }
    }

    fn counts(n: usize, draws: usize, mut f: impl FnMut() -> usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for _ in 0..draws {
            c[f()] += 1;
        }
        c
    }

    // Chi-square statistic against uniform.
    fn chi_square(c: &[usize]) -> f64 {
        let total: usize = c.iter().sum();
        let e = total as f64 / c.len() as f64;
        c.iter().map(|&o| (o as f64 - e).powi(2) / e).sum()
    }

    #[test]
    fn uncertainty_prefers_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_uncertain(&probs(&[0.9, 0.5, 0.1]), 0, &mut rng), 1);
    }

    #[test]
    fn symmetric_tie_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = probs(&[0.3, 0.7]);
        let c = counts(2, 10_000, || select_uncertain(&p, 0, &mut rng));
        // 1 degree of freedom, p = 0.001 critical value 10.83
        assert!(chi_square(&c) < 10.83, "{c:?}");
        let p = probs(&[0.2; 5]);
        let c = counts(5, 10_000, || select_uncertain(&p, 0, &mut rng));
        assert!(chi_square(&c) < 18.47, "{c:?}");
    }

    #[test]
    fn epsilon_zero_is_greedy() {
        let p = probs(&[0.4, 0.8, 0.8, 0.1]);
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert_eq!(
                select_eps_greedy(&p, 0, 0.0, &mut a).unwrap(),
                select_greedy(&p, 0, &mut b)
            );
        }
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let p = probs(&[0.9, 0.1, 0.5, 0.2]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = counts(4, 100_000, || {
            select_eps_greedy(&p, 0, 1.0, &mut rng).unwrap()
        });
        // 3 degrees of freedom, p = 0.001 critical value 16.27
        assert!(chi_square(&c) < 16.27, "{c:?}");
    }

    #[test]
    fn epsilon_mixture_frequency() {
        let p = probs(&[0.9, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = counts(2, 100_000, || {
            select_eps_greedy(&p, 0, 0.15, &mut rng).unwrap()
        });
        let f = c[0] as f64 / 1e5;
        assert!((f - 0.925).abs() < 0.01, "{f}");
    }

    #[test]
    fn epsilon_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(select_eps_greedy(&probs(&[0.5]), 0, 1.5, &mut rng).is_err());
        assert!(select_eps_greedy(&probs(&[0.5]), 0, -0.1, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn uncertain_maximizes_bernoulli_variance(row in proptest::collection::vec(0.0f64..=1.0, 1..25), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = select_uncertain(&probs(&row), 0, &mut rng);
            let var = |q: f64| q * (1.0 - q);
            let best = row.iter().map(|&q| var(q)).fold(f64::MIN, f64::max);
            prop_assert!(var(row[j]) >= best - 1e-15);
            let d = (row[j] - 0.5).abs();
            prop_assert!(row.iter().all(|q| (q - 0.5).abs() >= d - SCORE_TIE));
        }
    }
}

//! Synthetic stochastic grasping environment over the six-dimensional
//! grasping control space.
//!
//! Success probability is `σ(base + Σ g_i(b_i) + Σ h_ij(b_i, b_j) + c⟨w, φ⟩)`
//! where every term is evaluated at bin resolution: `g_i` is a smooth bump
//! around a preferred bin, `h_ij` a bilinear coupling of centred bin
//! coordinates and `φ` the context features.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::{Error, Result};
use crate::learner::Context;
use crate::space::{ActionVector, BinnedAction, ControlSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainEffect {
    /// Peak-to-trough half range of the effect in log-odds.
    pub magnitude: f64,
    /// Preferred position in unit coordinates.
    pub optimum: f64,
    /// Bump width in unit coordinates.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticGraspSpec {
    pub space: ControlSpace,
    pub base: f64,
    pub main_effects: Vec<MainEffect>,
    pub interactions: Vec<Interaction>,
    pub context_scale: f64,
    /// Weights on the context features `(class_a, class_b, size, aspect)`.
    pub context_weights: Vec<f64>,
    pub seen_contexts: usize,
    pub novel_contexts: usize,
    pub seed: u64,
}

impl SyntheticGraspSpec {
    /// Main-effect magnitudes ordered h_g > theta > f_g > m_g > alpha > beta,
    /// four pairwise couplings.
    pub fn tabletop_6d() -> Self {
        let effect = |magnitude: f64, optimum: f64, width: f64| MainEffect {
            magnitude,
            optimum,
            width,
        };
        Self {
            space: ControlSpace::grasping_preset(),
            base: -1.2,
            main_effects: vec![
                effect(1.2, 0.30, 0.20),  // theta
                effect(0.35, 0.65, 0.30), // alpha
                effect(0.25, 0.40, 0.30), // beta
                effect(3.0, 0.70, 0.25),  // h_g
                effect(0.6, 0.85, 0.35),  // m_g
                effect(0.9, 0.60, 0.20),  // f_g
            ],
            interactions: vec![
                Interaction {
                    i: 0,
                    j: 2,
                    strength: 0.8,
                },
                Interaction {
                    i: 1,
                    j: 3,
                    strength: 0.7,
                },
                Interaction {
                    i: 4,
                    j: 5,
                    strength: 0.6,
                },
                Interaction {
                    i: 0,
                    j: 1,
                    strength: -0.5,
                },
            ],
            context_scale: 1.0,
            context_weights: vec![0.25, -0.25, 0.4, -0.3],
            seen_contexts: 10,
            novel_contexts: 10,
            seed: 2017,
        }
    }

    fn validate(&self) -> Result<()> {
        let k = self.space.len();
        if self.main_effects.len() != k {
            return Err(Error::Shape {
                what: "main effects",
                expected: k,
                found: self.main_effects.len(),
            });
        }
        if self.context_weights.len() != FEATURES {
            return Err(Error::Shape {
                what: "context weights",
                expected: FEATURES,
                found: self.context_weights.len(),
            });
        }
        let finite = |v: f64| v.is_finite();
        let mut ok = finite(self.base)
            && finite(self.context_scale)
            && self.context_weights.iter().all(|&w| finite(w));
        for m in &self.main_effects {
            ok &= finite(m.magnitude) && finite(m.optimum) && finite(m.width) && m.width > 0.0;
        }
        for h in &self.interactions {
            ok &= finite(h.strength);
            if h.i >= k || h.j >= k || h.i == h.j {
                return Err(Error::param(format!(
                    "interaction ({}, {}) is not a valid pair",
                    h.i, h.j
                )));
            }
        }
        if !ok {
            return Err(Error::param(
                "synthetic grasp coefficients must be finite with positive widths",
            ));
        }
        if self.seen_contexts == 0 {
            return Err(Error::param("need at least one seen context"));
        }
        Ok(())
    }
}

const FEATURES: usize = 4;

pub struct SyntheticGrasp {
    spec: SyntheticGraspSpec,
    /// Log-odds contribution of each (dimension, bin).
    main: Vec<Vec<f64>>,
    /// Centred bin coordinates in [-1, 1] per (dimension, bin).
    centred: Vec<Vec<f64>>,
    seen: Vec<Context>,
    novel: Vec<Context>,
}

fn make_contexts(prefix: &str, count: usize, rng: &mut ChaCha8Rng) -> Vec<Context> {
    (0..count)
        .map(|n| {
            let class = n % 2;
            let mut f = vec![0.0; FEATURES];
            f[class] = 1.0;
            f[2] = rng.random::<f64>();
            f[3] = rng.random::<f64>();
            Context::new(format!("{prefix}-{n:02}"), f)
        })
        .collect()
}

impl SyntheticGrasp {
    pub fn new(spec: SyntheticGraspSpec) -> Result<Self> {
        spec.validate()?;
        let mut main = Vec::new();
        let mut centred = Vec::new();
        for (d, m) in spec.space.dims().iter().zip(&spec.main_effects) {
            let units: Vec<f64> = (0..d.bins)
                .map(|b| (b as f64 + 0.5) / d.bins as f64)
                .collect();
            main.push(
                units
                    .iter()
                    .map(|u| {
                        m.magnitude * (2.0 * (-((u - m.optimum) / m.width).powi(2)).exp() - 1.0)
                    })
                    .collect(),
            );
            centred.push(units.iter().map(|u| 2.0 * u - 1.0).collect());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let seen = make_contexts("seen", spec.seen_contexts, &mut rng);
        let novel = make_contexts("novel", spec.novel_contexts, &mut rng);
        Ok(Self {
            spec,
            main,
            centred,
            seen,
            novel,
        })
    }

    pub fn spec(&self) -> &SyntheticGraspSpec {
        &self.spec
    }

    /// Log-odds contributed by the action alone.
    pub fn action_logit(&self, bins: &[usize]) -> f64 {
        let mut z: f64 = bins.iter().enumerate().map(|(i, &b)| self.main[i][b]).sum();
        for h in &self.spec.interactions {
            z += h.strength * self.centred[h.i][bins[h.i]] * self.centred[h.j][bins[h.j]];
        }
        z
    }

    pub fn context_logit(&self, context: &Context) -> f64 {
        self.spec.context_scale
            * self
                .spec
                .context_weights
                .iter()
                .zip(&context.features)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn probability_of_bins(&self, context: &Context, bins: &[usize]) -> f64 {
        let z = self.spec.base + self.action_logit(bins) + self.context_logit(context);
        1.0 / (1.0 + (-z).exp())
    }

    /// Best joint bin setting by exhaustive search over the whole grid.
    pub fn optimal_bins(&self) -> (BinnedAction, f64) {
        let counts = self.spec.space.bin_counts();
        let mut cur = vec![0usize; counts.len()];
        let mut best = (cur.clone(), f64::NEG_INFINITY);
        loop {
            let z = self.action_logit(&cur);
            if z > best.1 {
                best = (cur.clone(), z);
            }
            // odometer increment
            let mut d = 0;
            loop {
                if d == counts.len() {
                    return (BinnedAction(best.0), best.1);
                }
                cur[d] += 1;
                if cur[d] < counts[d] {
                    break;
                }
                cur[d] = 0;
                d += 1;
            }
        }
    }

    /// Mean success probability of the optimal action over `contexts`.
    pub fn ceiling(&self, contexts: &[Context]) -> f64 {
        let (bins, _) = self.optimal_bins();
        contexts
            .iter()
            .map(|c| self.probability_of_bins(c, &bins.0))
            .sum::<f64>()
            / contexts.len() as f64
    }
}

impl Environment for SyntheticGrasp {
    fn name(&self) -> &str {
        "tabletop-6d"
    }

    fn space(&self) -> &ControlSpace {
        &self.spec.space
    }

    fn feature_len(&self) -> usize {
        FEATURES
    }

    fn seen_contexts(&self) -> &[Context] {
        &self.seen
    }

    fn novel_contexts(&self) -> &[Context] {
        &self.novel
    }

    fn evaluate(
        &self,
        context: &Context,
        action: &ActionVector,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let p = self
            .success_probability(context, action)
            .ok_or_else(|| Error::param("action outside the control space"))?;
        Ok(if rng.random::<f64>() < p { 1.0 } else { 0.0 })
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn success_probability(&self, context: &Context, action: &ActionVector) -> Option<f64> {
        let bins = self.spec.space.bin_of(action).ok()?;
        Some(self.probability_of_bins(context, &bins.0))
    }
}

//! Analytic sensitivity benchmarks with closed-form Sobol indices.

use std::f64::consts::PI;

use rand::RngCore;

use super::Environment;
use crate::error::{Error, Result};
use crate::learner::Context;
use crate::space::{ActionVector, ControlDim, ControlSpace};

const BENCH_BINS: usize = 10;

type Formula = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Deterministic benchmark function with a single dummy context per pool.
pub struct AnalyticEnv {
    name: String,
    space: ControlSpace,
    seen: Vec<Context>,
    novel: Vec<Context>,
    formula: Formula,
}

impl AnalyticEnv {
    fn new(name: &str, space: ControlSpace, formula: Formula) -> Self {
        Self {
            name: name.into(),
            space,
            seen: vec![Context::new(format!("{name}-seen"), vec![])],
            novel: vec![Context::new(format!("{name}-novel"), vec![])],
            formula,
        }
    }

    /// Evaluates the formula directly on a point in dimension units.
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.formula)(x)
    }
}

impl Environment for AnalyticEnv {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &ControlSpace {
        &self.space
    }

    fn feature_len(&self) -> usize {
        0
    }

    fn seen_contexts(&self) -> &[Context] {
        &self.seen
    }

    fn novel_contexts(&self) -> &[Context] {
        &self.novel
    }

    fn evaluate(
        &self,
        _context: &Context,
        action: &ActionVector,
        _rng: &mut dyn RngCore,
    ) -> Result<f64> {
        self.space.to_unit(action)?;
        Ok(self.value(&action.0))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// `sin x1 + a sin² x2 + b x3⁴ sin x1` on `[-π, π]³`.
pub fn ishigami(a: f64, b: f64) -> AnalyticEnv {
    let dims = (1..=3)
        .map(|i| ControlDim::new(format!("x{i}"), -PI, PI, BENCH_BINS).expect("valid range"))
        .collect();
    let space = ControlSpace::new(dims).expect("valid space");
    AnalyticEnv::new(
        "ishigami",
        space,
        Box::new(move |x| x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()),
    )
}

/// Closed-form `(s1, st, s13)` of the Ishigami function on `[-π, π]³`.
pub fn ishigami_indices(a: f64, b: f64) -> ([f64; 3], [f64; 3], f64) {
    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    (
        [v1 / v, v2 / v, 0.0],
        [(v1 + v13) / v, v2 / v, v13 / v],
        v13 / v,
    )
}

/// Sobol g-function `∏ (|4x_i − 2| + a_i) / (1 + a_i)` on `[0, 1]^K`. An
/// infinite coefficient makes its factor identically one.
pub fn g_function(a: &[f64]) -> Result<AnalyticEnv> {
    if a.is_empty() {
        return Err(Error::param("g-function needs at least one coefficient"));
    }
    if a.iter().any(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::param("g-function coefficients must be non-negative"));
    }
    let space = ControlSpace::unit_cube(a.len(), BENCH_BINS)?;
    let a = a.to_vec();
    Ok(AnalyticEnv::new(
        "gfunction",
        space,
        Box::new(move |x| {
            x.iter()
                .zip(&a)
                .map(|(&xi, &ai)| {
                    if ai.is_infinite() {
                        1.0
                    } else {
                        ((4.0 * xi - 2.0).abs() + ai) / (1.0 + ai)
                    }
                })
                .product()
        }),
    ))
}

/// Closed-form first-order indices of the g-function.
pub fn g_function_indices(a: &[f64]) -> Vec<f64> {
    let partial: Vec<f64> = a
        .iter()
        .map(|&ai| (1.0 / 3.0) / (1.0 + ai).powi(2))
        .collect();
    let v = partial.iter().map(|vi| 1.0 + vi).product::<f64>() - 1.0;
    partial.iter().map(|vi| vi / v).collect()
}

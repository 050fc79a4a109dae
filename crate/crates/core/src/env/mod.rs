//! Black-box environments evaluated by the training loop.

mod benchmarks;
mod grasp;

pub use benchmarks::{g_function, g_function_indices, ishigami, ishigami_indices, AnalyticEnv};
pub use grasp::{Interaction, MainEffect, SyntheticGrasp, SyntheticGraspSpec};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::learner::Context;
use crate::space::ActionVector;
use crate::space::ControlSpace;

/// A black-box `y = F(context, action)`.
///
/// Stochastic environments return outcomes in `{0, 1}`; deterministic
/// benchmarks return a real value and never touch the rng.
pub trait Environment: Send + Sync {
    fn name(&self) -> &str;

    fn space(&self) -> &ControlSpace;

    fn feature_len(&self) -> usize;

    /// Contexts used for data collection and seen-object evaluation.
    fn seen_contexts(&self) -> &[Context];

    /// Held-out contexts, disjoint from [`seen_contexts`](Self::seen_contexts).
    fn novel_contexts(&self) -> &[Context];

    fn evaluate(
        &self,
        context: &Context,
        action: &ActionVector,
        rng: &mut dyn RngCore,
    ) -> Result<f64>;

    fn is_deterministic(&self) -> bool;

    /// Ground-truth success probability, when the environment exposes one.
    fn success_probability(&self, _context: &Context, _action: &ActionVector) -> Option<f64> {
        None
    }
}

pub const PRESETS: &[&str] = &["ishigami", "gfunction", "tabletop-6d"];

/// Environment preset by name.
pub fn preset(name: &str) -> Result<Box<dyn Environment>> {
    match name {
        "ishigami" => Ok(Box::new(ishigami(7.0, 0.1))),
        "gfunction" => Ok(Box::new(g_function(&[0.0, 1.0, 4.5, 9.0, 99.0, 99.0])?)),
        "tabletop-6d" => Ok(Box::new(SyntheticGrasp::new(
            SyntheticGraspSpec::tabletop_6d(),
        )?)),
        other => Err(Error::param(format!(
            "unknown environment preset `{other}` (known: {})",
            PRESETS.join(", ")
        ))),
    }
}

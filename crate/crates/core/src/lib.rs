//! Curriculum-accelerated self-supervised learning over discretized control
//! spaces.
//!
//! The crate collects quasi-random trials of a black-box environment, ranks
//! control dimensions by variance-based sensitivity, turns the ranking into a
//! curriculum, and trains per-dimension success models stage by stage.

pub mod curriculum;
pub mod dataset;
pub mod env;
pub mod error;
pub mod learner;
pub mod pipeline;
pub mod rng;
pub mod sensitivity;
pub mod sobol;
pub mod space;
pub mod stats;

pub use curriculum::{build_curriculum, energy, Curriculum};
pub use dataset::{Dataset, TrialRecord};
pub use env::Environment;
pub use error::{Error, Result};
pub use learner::{BinProbabilities, Context, LearnerConfig, LearnerKind, PolicyModel};
pub use pipeline::{RunConfig, RunOutput, RunReport, StageConfig};
pub use sensitivity::{analyze, analyze_dataset, bootstrap_ci, SensitivityReport};
pub use sobol::{sobol_points, SaltelliDesign, SobolStream};
pub use space::{ActionVector, BinnedAction, ControlDim, ControlSpace};

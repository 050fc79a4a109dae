//! Files written by the commands. Every JSON document carries a schema
//! version and the configuration that produced it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cassl_core::curriculum::StageTrace;
use cassl_core::{PolicyModel, RunReport, SensitivityReport};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityFile {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub environment: String,
    pub design_rows: usize,
    /// Mean outcome over the design (success rate for binary environments).
    pub mean_outcome: f64,
    pub report: SensitivityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletonEnergy {
    pub dim: String,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub stage: usize,
    pub remaining: Vec<String>,
    pub chosen: Vec<String>,
    pub energy: f64,
    pub singletons: Vec<SingletonEnergy>,
}

impl EnergyRow {
    pub fn from_trace(stage: usize, t: &StageTrace, dims: &[String]) -> Self {
        let names = |v: &[usize]| v.iter().map(|&i| dims[i].clone()).collect();
        Self {
            stage,
            remaining: names(&t.remaining),
            chosen: names(&t.chosen),
            energy: t.energy,
            singletons: t
                .singletons
                .iter()
                .map(|&(i, e)| SingletonEnergy {
                    dim: dims[i].clone(),
                    energy: e,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub position: usize,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderComparison {
    pub expected: Vec<String>,
    pub matches: bool,
    pub deviations: Vec<Deviation>,
}

impl OrderComparison {
    pub fn new(expected: Vec<String>, actual: &[String]) -> Self {
        let deviations: Vec<Deviation> = expected
            .iter()
            .zip(actual)
            .enumerate()
            .filter(|(_, (e, a))| e != a)
            .map(|(position, (e, a))| Deviation {
                position,
                expected: e.clone(),
                actual: a.clone(),
            })
            .collect();
        Self {
            matches: deviations.is_empty() && expected.len() == actual.len(),
            expected,
            deviations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumFile {
    pub schema_version: u32,
    /// Configuration of the analysis the ranking came from, when known.
    pub config: Option<ExperimentConfig>,
    pub dims: Vec<String>,
    pub stages: Vec<Vec<String>>,
    pub flat_order: Vec<String>,
    pub energy_table: Vec<EnergyRow>,
    pub comparison: Option<OrderComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub model: PolicyModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ceiling {
    pub seen: f64,
    pub novel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub report: RunReport,
    pub sensitivity: Option<SensitivityReport>,
    /// Success of the best grid action under ground truth.
    pub ceiling: Option<Ceiling>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let f = File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(CliError::runtime)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(CliError::runtime)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

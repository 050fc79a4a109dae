//! Trial records and the append-only aggregate dataset.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{ActionVector, BinnedAction};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// One black-box evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub trial_id: u64,
    pub stage: u32,
    pub context_id: String,
    pub features: Vec<f64>,
    pub action: ActionVector,
    pub bins: BinnedAction,
    pub outcome: u8,
    /// Selection rule per dimension, or the collection scheme for whole-trial policies.
    pub policy: String,
    pub seed: u64,
}

fn schema_version() -> u32 {
    DATASET_SCHEMA_VERSION
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dataset {
    records: Vec<TrialRecord>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: TrialRecord) -> Result<()> {
        if record.outcome > 1 {
            return Err(Error::param(format!(
                "trial {} has non-binary outcome {}",
                record.trial_id, record.outcome
            )));
        }
        if let Some(last) = self.records.last() {
            if record.stage < last.stage {
                return Err(Error::param(format!(
                    "stage labels must not decrease: {} after {}",
                    record.stage, last.stage
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        for r in &other.records {
            self.push(r.clone())?;
        }
        Ok(())
    }

    pub fn success_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records
            .iter()
            .map(|r| f64::from(r.outcome))
            .sum::<f64>()
            / self.records.len() as f64
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut ds = Dataset::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TrialRecord = serde_json::from_str(&line)?;
            if rec.schema_version != DATASET_SCHEMA_VERSION {
                return Err(Error::Capability(format!(
                    "dataset schema version {} (expected {DATASET_SCHEMA_VERSION})",
                    rec.schema_version
                )));
            }
            ds.push(rec)?;
        }
        Ok(ds)
    }
}

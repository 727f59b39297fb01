//! The summary of one run, stored as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Method, SearchConfig};
use super::train::EpochLog;
use crate::error::{Error, Result};
use crate::io::bin::{read_file, write_file};
use crate::supernet::SearchSpace;
use crate::tasks::Metrics;
use crate::tdnnf::CandidateSpec;

pub const RECORD_MAGIC: &str = "TDNNAS-RR1";
pub const RECORD_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format: String,
    pub version: u32,
    /// Identifier used to label this run in reports.
    pub system: String,
    pub method: Method,
    pub eta: f64,
    pub seed: u64,
    /// SHA-256 of the configuration the run was started from.
    pub config_hash: String,
    pub config: SearchConfig,
    pub space: SearchSpace,
    pub spec: CandidateSpec,
    pub architecture: String,
    pub param_count: usize,
    pub epochs: Vec<EpochLog>,
    pub heldout: Metrics,
    pub test: Option<Metrics>,
    /// File holding the λ trajectory, relative to the record.
    pub trajectory: Option<String>,
    pub trajectory_rows: usize,
    pub wall_time_secs: f64,
}

impl RunRecord {
    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &RunRecord) -> bool {
        let mut a = self.clone();
        a.wall_time_secs = other.wall_time_secs;
        a == *other
    }

    pub fn test_accuracy(&self) -> Option<f64> {
        self.test.as_ref().map(|m| m.accuracy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<RunRecord> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        if value.get("format").and_then(|v| v.as_str()) != Some(RECORD_MAGIC) {
            return Err(Error::BadMagic {
                path: path.display().to_string(),
                expected: RECORD_MAGIC,
            });
        }
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != RECORD_VERSION {
            return Err(Error::BadVersion {
                path: path.display().to_string(),
                found: version,
                expected: RECORD_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| Error::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        write_file(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<RunRecord> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|_| Error::Format {
            path: path.display().to_string(),
            msg: "not UTF-8".into(),
        })?;
        RunRecord::from_json(&text, path)
    }
}

//! Spec files: one candidate as JSON, with its architecture string.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bin::{read_file, write_file};
use super::notation::{format_spec, parse_spec};
use crate::error::{Error, Result};
use crate::tdnnf::{CandidateSpec, Geometry, LayerChoice};

pub const SPEC_MAGIC: &str = "TDNNAS-SP1";
pub const SPEC_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub architecture: String,
    pub geometry: Geometry,
    pub layers: Vec<LayerChoice>,
}

impl SpecFile {
    pub fn new(spec: &CandidateSpec, config_hash: &str) -> Self {
        SpecFile {
            format: SPEC_MAGIC.into(),
            version: SPEC_VERSION,
            config_hash: config_hash.into(),
            architecture: format_spec(spec),
            geometry: spec.geometry,
            layers: spec.layers.clone(),
        }
    }

    pub fn spec(&self) -> CandidateSpec {
        CandidateSpec {
            geometry: self.geometry,
            layers: self.layers.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec file serializes");
        s.push('\n');
        s
    }

    /// Parses and checks the header, the layer table and its agreement with
    /// the architecture string.
    pub fn from_json(text: &str, path: &Path) -> Result<SpecFile> {
        let fmt = |msg: String| Error::Format {
            path: path.display().to_string(),
            msg,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| fmt(e.to_string()))?;
        if value.get("format").and_then(|v| v.as_str()) != Some(SPEC_MAGIC) {
            return Err(Error::BadMagic {
                path: path.display().to_string(),
                expected: SPEC_MAGIC,
            });
        }
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != SPEC_VERSION {
            return Err(Error::BadVersion {
                path: path.display().to_string(),
                found: version,
                expected: SPEC_VERSION,
            });
        }
        let file: SpecFile = serde_json::from_value(value).map_err(|e| fmt(e.to_string()))?;
        let spec = file.spec();
        spec.validate()?;
        let parsed = parse_spec(&file.architecture, &file.geometry)?;
        if parsed != spec {
            return Err(fmt(format!(
                "architecture string {:?} disagrees with the layer table ({:?})",
                file.architecture,
                format_spec(&spec)
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<SpecFile> {
        let text = String::from_utf8(read_file(path)?).map_err(|_| Error::Format {
            path: path.display().to_string(),
            msg: "not UTF-8".into(),
        })?;
        SpecFile::from_json(&text, path)
    }
}

//! λ trajectories as JSON lines: a header line, then one row per layer
//! per architecture step.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bin::{read_file, write_file};
use crate::error::{Error, Result};
use crate::search::TrajectoryRow;

pub const TRAJECTORY_MAGIC: &str = "TDNNAS-TJ1";
pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config_hash: String,
}

pub fn encode_trajectory(rows: &[TrajectoryRow], config_hash: &str) -> String {
    let header = Header {
        format: TRAJECTORY_MAGIC.into(),
        version: TRAJECTORY_VERSION,
        config_hash: config_hash.into(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serializes"));
        out.push('\n');
    }
    out
}

pub fn decode_trajectory(text: &str, path: &Path) -> Result<(String, Vec<TrajectoryRow>)> {
    let err = |line: usize, msg: String| Error::Format {
        path: path.display().to_string(),
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines();
    let header: Header = serde_json::from_str(lines.next().unwrap_or(""))
        .map_err(|_| Error::BadMagic { path: path.display().to_string(), expected: TRAJECTORY_MAGIC })?;
    if header.format != TRAJECTORY_MAGIC {
        return Err(Error::BadMagic {
            path: path.display().to_string(),
            expected: TRAJECTORY_MAGIC,
        });
    }
    if header.version != TRAJECTORY_VERSION {
        return Err(Error::BadVersion {
            path: path.display().to_string(),
            found: header.version,
            expected: TRAJECTORY_VERSION,
        });
    }
    let rows = lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| err(i + 2, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok((header.config_hash, rows))
}

pub fn save_trajectory(path: &Path, rows: &[TrajectoryRow], config_hash: &str) -> Result<()> {
    write_file(path, encode_trajectory(rows, config_hash).as_bytes())
}

pub fn load_trajectory(path: &Path) -> Result<(String, Vec<TrajectoryRow>)> {
    let text = String::from_utf8(read_file(path)?).map_err(|_| Error::Format {
        path: path.display().to_string(),
        msg: "not UTF-8".into(),
    })?;
    decode_trajectory(&text, path)
}

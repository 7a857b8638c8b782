//! Trajectory trace file: JSON lines. The first line is a [`TraceHeader`];
//! every following line is one instance:
//!
//! ```text
//! {"instance_id":0,"predicted_label":3,"true_label":3,"patterns":[{"bits":"b0","len":5},...]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActivationPattern, Trajectory, TrajectorySet};
use crate::error::{Error, Result};
use crate::nn::Architecture;
use crate::InstanceId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub fingerprint: String,
    pub architecture: Architecture,
    /// Opaque description of where the instances came from.
    pub dataset: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct PatternRecord {
    bits: String,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    instance_id: InstanceId,
    predicted_label: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_label: Option<u32>,
    patterns: Vec<PatternRecord>,
}

pub fn write_trace(path: impl AsRef<Path>, header: &TraceHeader, set: &TrajectorySet) -> Result<()> {
    let path = path.as_ref();
    if header.fingerprint != set.fingerprint() {
        return Err(Error::Stale {
            expected: header.fingerprint.clone(),
            found: set.fingerprint().to_string(),
        });
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n").map_err(io)?;
    for t in set.trajectories() {
        let record = TraceRecord {
            instance_id: t.instance_id,
            predicted_label: t.predicted_label,
            true_label: t.true_label,
            patterns: t
                .patterns
                .iter()
                .map(|p| PatternRecord {
                    bits: p.to_hex(),
                    len: p.len(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<(TraceHeader, TrajectorySet)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::format(path, "missing header line"))?
        .map_err(|e| Error::io(path, e))?;
    let header: TraceHeader = serde_json::from_str(&first)
        .map_err(|e| Error::format(path, format!("header: {e}")))?;
    header
        .architecture
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;

    let mut trajectories = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 2)))?;
        let patterns = record
            .patterns
            .iter()
            .enumerate()
            .map(|(l, p)| ActivationPattern::from_hex(l + 1, &p.bits, p.len))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 2)))?;
        trajectories.push(Trajectory {
            instance_id: record.instance_id,
            patterns,
            predicted_label: record.predicted_label,
            true_label: record.true_label,
        });
    }
    let set = TrajectorySet::new(
        header.fingerprint.clone(),
        header.architecture.hidden_widths.clone(),
        trajectories,
    )
    .map_err(|e| Error::format(path, e.to_string()))?;
    Ok((header, set))
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Anchor, Cluster, LabelMode, Partition, SplitRecord};
use crate::apd::{Apd, NodeId};
use crate::error::{Error, Result};
use crate::InstanceId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorPattern {
    pub bits: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    /// `null` for the out node.
    pub anchor_node: Option<NodeId>,
    pub anchor_layer: usize,
    pub anchor_pattern: Option<AnchorPattern>,
    pub ids: Vec<InstanceId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildRecord {
    pub node: NodeId,
    pub ids: Vec<InstanceId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecordFile {
    pub parent_node: Option<NodeId>,
    pub parent_ids: Vec<InstanceId>,
    pub children: Vec<ChildRecord>,
    pub information_gain: f64,
    pub accepted: bool,
}

/// On-disk partition, tied to the network that produced the trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub fingerprint: String,
    pub label_mode: LabelMode,
    pub clusters: Vec<ClusterRecord>,
    pub history: Vec<SplitRecordFile>,
}

impl PartitionFile {
    pub fn new(partition: &Partition, apd: &Apd, label_mode: LabelMode) -> Self {
        let clusters = partition
            .clusters
            .iter()
            .map(|c| {
                let pattern = c.anchor.node().map(|n| {
                    let p = &apd.nodes()[n].pattern;
                    AnchorPattern {
                        bits: p.to_hex(),
                        len: p.len(),
                    }
                });
                ClusterRecord {
                    anchor_node: c.anchor.node(),
                    anchor_layer: c.depth,
                    anchor_pattern: pattern,
                    ids: c.instance_ids.clone(),
                }
            })
            .collect();
        let history = partition
            .history
            .iter()
            .map(|r| SplitRecordFile {
                parent_node: r.parent.node(),
                parent_ids: r.parent_ids.clone(),
                children: r
                    .children
                    .iter()
                    .map(|(node, ids)| ChildRecord {
                        node: *node,
                        ids: ids.clone(),
                    })
                    .collect(),
                information_gain: r.information_gain,
                accepted: r.accepted,
            })
            .collect();
        Self {
            fingerprint: apd.fingerprint().to_string(),
            label_mode,
            clusters,
            history,
        }
    }

    pub fn to_partition(&self) -> Partition {
        let anchor = |n: Option<NodeId>| n.map_or(Anchor::Out, Anchor::Node);
        Partition {
            clusters: self
                .clusters
                .iter()
                .map(|c| Cluster {
                    instance_ids: c.ids.clone(),
                    anchor: anchor(c.anchor_node),
                    depth: c.anchor_layer,
                })
                .collect(),
            history: self
                .history
                .iter()
                .map(|r| SplitRecord {
                    parent: anchor(r.parent_node),
                    parent_ids: r.parent_ids.clone(),
                    children: r.children.iter().map(|c| (c.node, c.ids.clone())).collect(),
                    information_gain: r.information_gain,
                    accepted: r.accepted,
                })
                .collect(),
        }
    }
}

pub fn write_partition(path: impl AsRef<Path>, file: &PartitionFile) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string(file)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<PartitionFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

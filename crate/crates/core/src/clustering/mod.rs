//! Backward partition refinement over the activation pattern DAG.
//!
//! The whole dataset starts at a virtual `out` node whose predecessors are
//! the last-layer nodes. A cluster sitting at node `n` is split by the
//! patterns its members take in the layer before `n`; the split is kept
//! only when it has positive information gain on the cluster's labels.
//! Clusters at a first-layer node, singleton clusters and clusters whose
//! best split has zero gain are final.

mod entropy;
mod partition_file;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::apd::{Apd, NodeId};
use crate::error::{Error, Result};
use crate::patterns::TrajectorySet;
use crate::InstanceId;

pub use entropy::{entropy, information_gain};
pub use partition_file::{read_partition, write_partition, PartitionFile};

/// Which labels drive the information gain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// Labels produced by the network.
    #[default]
    Predicted,
    /// Ground-truth labels recorded in the trajectories.
    True,
}

impl std::str::FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" => Ok(LabelMode::Predicted),
            "true" => Ok(LabelMode::True),
            other => Err(Error::InvalidConfig(format!(
                "label mode must be 'predicted' or 'true', got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Anchor {
    Node(NodeId),
    /// The virtual sink after the last hidden layer.
    Out,
}

impl Anchor {
    pub fn node(self) -> Option<NodeId> {
        match self {
            Anchor::Node(n) => Some(n),
            Anchor::Out => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Sorted ascending.
    pub instance_ids: Vec<InstanceId>,
    pub anchor: Anchor,
    /// Layer of the anchor node; `L + 1` for the out node. For singletons
    /// this is where splitting stopped, an upper bound on where they separated.
    pub depth: usize,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    pub parent: Anchor,
    pub parent_ids: Vec<InstanceId>,
    pub children: Vec<(NodeId, Vec<InstanceId>)>,
    pub information_gain: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// In order of finalization.
    pub clusters: Vec<Cluster>,
    /// Every gain evaluation, accepted or not, in evaluation order.
    pub history: Vec<SplitRecord>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn num_instances(&self) -> usize {
        self.clusters.iter().map(Cluster::len).sum()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        cluster_sizes(self)
    }

    /// Cluster index of every instance.
    pub fn assignment(&self) -> BTreeMap<InstanceId, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, cl)| cl.instance_ids.iter().map(move |&id| (id, c)))
            .collect()
    }

    /// Clusters must be non-empty, pairwise disjoint and cover `ids` exactly.
    pub fn check_covers(&self, ids: &BTreeSet<InstanceId>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (c, cluster) in self.clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::Invariant(format!("cluster {c} is empty")));
            }
            for &id in &cluster.instance_ids {
                if !seen.insert(id) {
                    return Err(Error::Invariant(format!("instance {id} in two clusters")));
                }
            }
        }
        if &seen != ids {
            return Err(Error::Invariant(format!(
                "partition covers {} ids, dataset has {}",
                seen.len(),
                ids.len()
            )));
        }
        Ok(())
    }

    /// Re-apply the accepted splits to `root` and return the resulting clusters.
    pub fn replay_history(&self, root: &[InstanceId]) -> Result<BTreeSet<Vec<InstanceId>>> {
        let mut current: BTreeSet<Vec<InstanceId>> = BTreeSet::new();
        current.insert(sorted(root.to_vec()));
        for record in self.history.iter().filter(|r| r.accepted) {
            if !current.remove(&record.parent_ids) {
                return Err(Error::Invariant(format!(
                    "history splits a cluster of {} that is not current",
                    record.parent_ids.len()
                )));
            }
            for (_, ids) in &record.children {
                current.insert(ids.clone());
            }
        }
        Ok(current)
    }
}

fn sorted(mut ids: Vec<InstanceId>) -> Vec<InstanceId> {
    ids.sort_unstable();
    ids
}

pub fn cluster_sizes(partition: &Partition) -> Vec<usize> {
    partition.clusters.iter().map(Cluster::len).collect()
}

pub fn split(apd: &Apd, set: &TrajectorySet) -> Result<Partition> {
    split_with(apd, set, LabelMode::Predicted)
}

pub fn split_with(apd: &Apd, set: &TrajectorySet, mode: LabelMode) -> Result<Partition> {
    apd.check_fingerprint(set)?;
    if set.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset".into()));
    }
    let depth = set.depth();
    let label = |id: InstanceId| -> Result<u32> {
        let t = set.get(id).ok_or(Error::Unknown {
            kind: "instance",
            id: id.to_string(),
        })?;
        match mode {
            LabelMode::Predicted => Ok(t.predicted_label),
            LabelMode::True => t
                .true_label
                .ok_or_else(|| Error::InvalidQuery(format!("instance {id} has no true label"))),
        }
    };

    let out_preds: BTreeSet<NodeId> = apd.layer_nodes(depth).collect();
    let mut queue = VecDeque::from([(Anchor::Out, sorted(set.ids().into_iter().collect()))]);
    let mut clusters = Vec::new();
    let mut history = Vec::new();

    while let Some((anchor, ids)) = queue.pop_front() {
        let (layer, preds) = match anchor {
            Anchor::Out => (depth + 1, &out_preds),
            Anchor::Node(n) => (apd.node(n)?.pattern.layer(), apd.predecessors(n)?),
        };
        if preds.is_empty() || ids.len() == 1 {
            clusters.push(Cluster {
                instance_ids: ids,
                anchor,
                depth: layer,
            });
            continue;
        }

        // Region of each predecessor pattern within this cluster; empty
        // regions never materialize.
        let mut children: BTreeMap<NodeId, Vec<InstanceId>> = BTreeMap::new();
        for &id in &ids {
            let pattern = &set.get(id).expect("id from set").patterns[layer - 2];
            let node = apd
                .node_of(pattern)
                .ok_or_else(|| Error::Invariant(format!("pattern {pattern} has no node")))?;
            if !preds.contains(&node) {
                return Err(Error::Invariant(format!(
                    "instance {id} reaches {anchor:?} from non-predecessor {node}"
                )));
            }
            children.entry(node).or_default().push(id);
        }

        let parent_labels = ids.iter().map(|&id| label(id)).collect::<Result<Vec<_>>>()?;
        let child_labels = children
            .values()
            .map(|c| c.iter().map(|&id| label(id)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let gain = information_gain(&parent_labels, &child_labels)?;
        let accepted = gain > 0.0;
        let children: Vec<(NodeId, Vec<InstanceId>)> = children.into_iter().collect();
        history.push(SplitRecord {
            parent: anchor,
            parent_ids: ids.clone(),
            children: children.clone(),
            information_gain: gain,
            accepted,
        });
        if accepted {
            queue.extend(children.into_iter().map(|(n, c)| (Anchor::Node(n), c)));
        } else {
            clusters.push(Cluster {
                instance_ids: ids,
                anchor,
                depth: layer,
            });
        }
    }

    let partition = Partition { clusters, history };
    partition.check_covers(&set.ids())?;
    Ok(partition)
}

//! The activation pattern DAG.
//!
//! Nodes are the distinct `(layer, pattern)` pairs observed over a dataset;
//! an edge joins a layer-`l` node to a layer-`l+1` node whenever some
//! instance realizes both, and carries the ids of those instances. Every
//! edge points one layer forward, so the graph is acyclic and the
//! layer-major node order is a topological order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::{ActivationPattern, TrajectorySet};
use crate::InstanceId;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApdNode {
    pub id: NodeId,
    pub pattern: ActivationPattern,
}

#[derive(Debug, Clone)]
pub struct Apd {
    fingerprint: String,
    nodes: Vec<ApdNode>,
    layers: Vec<Range<NodeId>>,
    lookup: HashMap<ActivationPattern, NodeId>,
    edges: BTreeMap<(NodeId, NodeId), Vec<InstanceId>>,
    succ: Vec<BTreeSet<NodeId>>,
    pred: Vec<BTreeSet<NodeId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

/// Stability of every node, indexed by node id.
pub type StabilityMap = Vec<Stability>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApdStats {
    pub nodes_per_layer: Vec<usize>,
    /// Edge counts for the transitions 1->2, 2->3, ...
    pub edges_per_transition: Vec<usize>,
    /// Summed support sizes per transition; each equals the dataset size.
    pub support_per_transition: Vec<usize>,
    /// Support size of every edge, in edge order.
    pub support_sizes: Vec<usize>,
}

/// Nodes numbered layer by layer, within a layer in order of first appearance.
pub fn build_apd(set: &TrajectorySet) -> Result<Apd> {
    if set.is_empty() {
        return Err(Error::Empty("cannot build a graph from zero trajectories".into()));
    }
    let mut nodes = Vec::new();
    let mut layers = Vec::with_capacity(set.depth());
    let mut lookup = HashMap::new();
    for layer in 1..=set.depth() {
        let start = nodes.len();
        for pattern in set.layer_index(layer).keys() {
            lookup.insert(pattern.clone(), nodes.len());
            nodes.push(ApdNode {
                id: nodes.len(),
                pattern: pattern.clone(),
            });
        }
        layers.push(start..nodes.len());
    }

    let mut edges: BTreeMap<(NodeId, NodeId), Vec<InstanceId>> = BTreeMap::new();
    let mut succ = vec![BTreeSet::new(); nodes.len()];
    let mut pred = vec![BTreeSet::new(); nodes.len()];
    for t in set.trajectories() {
        for pair in t.patterns.windows(2) {
            let (u, v) = (lookup[&pair[0]], lookup[&pair[1]]);
            edges.entry((u, v)).or_default().push(t.instance_id);
            succ[u].insert(v);
            pred[v].insert(u);
        }
    }
    Ok(Apd {
        fingerprint: set.fingerprint().to_string(),
        nodes,
        layers,
        lookup,
        edges,
        succ,
        pred,
    })
}

impl Apd {
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn nodes(&self) -> &[ApdNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&ApdNode> {
        self.nodes.get(id).ok_or(Error::Unknown {
            kind: "node",
            id: id.to_string(),
        })
    }

    /// Node ids of `layer` (1-based).
    pub fn layer_nodes(&self, layer: usize) -> Range<NodeId> {
        self.layers[layer - 1].clone()
    }

    pub fn node_of(&self, pattern: &ActivationPattern) -> Option<NodeId> {
        self.lookup.get(pattern).copied()
    }

    pub fn edges(&self) -> &BTreeMap<(NodeId, NodeId), Vec<InstanceId>> {
        &self.edges
    }

    pub fn support(&self, from: NodeId, to: NodeId) -> Option<&[InstanceId]> {
        self.edges.get(&(from, to)).map(Vec::as_slice)
    }

    pub fn predecessors(&self, id: NodeId) -> Result<&BTreeSet<NodeId>> {
        self.node(id)?;
        Ok(&self.pred[id])
    }

    pub fn successors(&self, id: NodeId) -> Result<&BTreeSet<NodeId>> {
        self.node(id)?;
        Ok(&self.succ[id])
    }

    pub fn check_fingerprint(&self, set: &TrajectorySet) -> Result<()> {
        if self.fingerprint != set.fingerprint() {
            return Err(Error::Stale {
                expected: self.fingerprint.clone(),
                found: set.fingerprint().to_string(),
            });
        }
        Ok(())
    }

    /// Node ids visited by one instance, layer 1 first.
    pub fn instance_path(&self, set: &TrajectorySet, id: InstanceId) -> Result<Vec<NodeId>> {
        self.check_fingerprint(set)?;
        let t = set.get(id).ok_or(Error::Unknown {
            kind: "instance",
            id: id.to_string(),
        })?;
        t.patterns
            .iter()
            .map(|p| {
                self.node_of(p).ok_or_else(|| {
                    Error::Invariant(format!("pattern {p} of instance {id} has no node"))
                })
            })
            .collect()
    }

    /// A node is stable when every instance in its activation region has the
    /// same predicted label.
    pub fn classify_stability(&self, set: &TrajectorySet) -> Result<StabilityMap> {
        self.check_fingerprint(set)?;
        self.nodes
            .iter()
            .map(|node| {
                let region = set
                    .layer_index(node.pattern.layer())
                    .get(&node.pattern)
                    .ok_or_else(|| Error::Invariant(format!("node {} has no region", node.id)))?;
                let first = set.get(region[0]).map(|t| t.predicted_label);
                let pure = region
                    .iter()
                    .all(|&id| set.get(id).map(|t| t.predicted_label) == first);
                Ok(if pure {
                    Stability::Stable
                } else {
                    Stability::Unstable
                })
            })
            .collect()
    }

    pub fn stats(&self) -> ApdStats {
        let transitions = self.depth().saturating_sub(1);
        let mut edges_per_transition = vec![0; transitions];
        let mut support_per_transition = vec![0; transitions];
        let mut support_sizes = Vec::with_capacity(self.edges.len());
        for (&(u, _), ids) in &self.edges {
            let t = self.nodes[u].pattern.layer() - 1;
            edges_per_transition[t] += 1;
            support_per_transition[t] += ids.len();
            support_sizes.push(ids.len());
        }
        ApdStats {
            nodes_per_layer: self.layers.iter().map(|r| r.len()).collect(),
            edges_per_transition,
            support_per_transition,
            support_sizes,
        }
    }

    pub fn to_export(&self) -> ApdExport {
        ApdExport {
            fingerprint: self.fingerprint.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeExport {
                    id: n.id,
                    layer: n.pattern.layer(),
                    bits: n.pattern.to_hex(),
                    len: n.pattern.len(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|(&(from, to), support)| EdgeExport {
                    from,
                    to,
                    support: support.clone(),
                })
                .collect(),
        }
    }

    /// One edge per line: `from -> to [support_size]`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (&(from, to), support) in &self.edges {
            let _ = writeln!(out, "{from} -> {to} [{}]", support.len());
        }
        out
    }

    /// Structural checks: layered edges, non-empty supports, and per-transition
    /// supports that partition the instance ids.
    pub fn check_invariants(&self, set: &TrajectorySet) -> Result<()> {
        let all = set.ids();
        let mut covered = vec![IdCover::default(); self.depth().saturating_sub(1)];
        for (&(u, v), ids) in &self.edges {
            let (lu, lv) = (self.nodes[u].pattern.layer(), self.nodes[v].pattern.layer());
            if lv != lu + 1 {
                return Err(Error::Invariant(format!("edge {u}->{v} spans layers {lu}->{lv}")));
            }
            if ids.is_empty() {
                return Err(Error::Invariant(format!("edge {u}->{v} has empty support")));
            }
            covered[lu - 1].add(ids)?;
        }
        for (t, c) in covered.iter().enumerate() {
            if c.ids != all {
                return Err(Error::Invariant(format!(
                    "supports of transition {} cover {} of {} instances",
                    t + 1,
                    c.ids.len(),
                    all.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Default)]
struct IdCover {
    ids: BTreeSet<InstanceId>,
}

impl IdCover {
    fn add(&mut self, ids: &[InstanceId]) -> Result<()> {
        for &id in ids {
            if !self.ids.insert(id) {
                return Err(Error::Invariant(format!("instance {id} on two edges of one transition")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExport {
    pub id: NodeId,
    pub layer: usize,
    pub bits: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeExport {
    pub from: NodeId,
    pub to: NodeId,
    pub support: Vec<InstanceId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApdExport {
    pub fingerprint: String,
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<EdgeExport>,
}

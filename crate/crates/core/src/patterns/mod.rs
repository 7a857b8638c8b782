//! Activation patterns, activation regions and per-instance trajectories.

mod trace_file;

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::checkpoint::fingerprint;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{DenseReluNetwork, ForwardTrace};
use crate::{IdSet, InstanceId};

pub use trace_file::{read_trace, write_trace, TraceHeader};

/// On/off state of every unit in one hidden layer, packed 64 units per word.
/// Layers are 1-based; two patterns are equal only if their layers match.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationPattern {
    layer: usize,
    len: usize,
    words: Vec<u64>,
}

impl ActivationPattern {
    pub fn from_bits<I>(layer: usize, bits: I) -> Self
    where
        I: IntoIterator<Item = bool>,
    {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self { layer, len, words }
    }

    /// Convenience for fixtures: `&[1, 0, 1]`.
    pub fn from_slice(layer: usize, bits: &[u8]) -> Self {
        Self::from_bits(layer, bits.iter().map(|&b| b != 0))
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} of {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.bit(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Unit `i` maps to byte `i / 8`, mask `0x80 >> (i % 8)`; trailing pad bits are zero.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for i in (0..self.len).filter(|&i| self.bit(i)) {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
        hex::encode(bytes)
    }

    pub fn from_hex(layer: usize, hex_bits: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(hex_bits)
            .map_err(|e| Error::InvalidQuery(format!("bad hex pattern {hex_bits:?}: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::InvalidQuery(format!(
                "{} hex bytes for {len} bits",
                bytes.len()
            )));
        }
        let pad_set = (len..bytes.len() * 8).any(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0);
        if pad_set {
            return Err(Error::InvalidQuery(format!(
                "pattern {hex_bits:?} sets bits past length {len}"
            )));
        }
        Ok(Self::from_bits(
            layer,
            (0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0),
        ))
    }
}

impl std::fmt::Display for ActivationPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}[", self.layer)?;
        for (i, b) in self.bits().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

/// Pattern of hidden layer `layer` (1-based). A unit is on iff its
/// preactivation is strictly positive; exactly zero counts as off.
pub fn extract_pattern(trace: &ForwardTrace, layer: usize) -> Result<ActivationPattern> {
    if layer == 0 || layer > trace.preactivations.len() {
        return Err(Error::Index(format!(
            "layer {layer} outside 1..={}",
            trace.preactivations.len()
        )));
    }
    Ok(ActivationPattern::from_bits(
        layer,
        trace.preactivations[layer - 1].iter().map(|&v| v > 0.0),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub instance_id: InstanceId,
    /// One pattern per hidden layer, layer 1 first.
    pub patterns: Vec<ActivationPattern>,
    pub predicted_label: u32,
    pub true_label: Option<u32>,
}

/// Trajectories of a whole dataset under one network, plus the inverse
/// index `pattern -> ids` per layer. Immutable once built.
#[derive(Debug, Clone)]
pub struct TrajectorySet {
    fingerprint: String,
    layer_widths: Vec<usize>,
    trajectories: Vec<Trajectory>,
    position: HashMap<InstanceId, usize>,
    // per layer, patterns in first-seen order
    index: Vec<IndexMap<ActivationPattern, Vec<InstanceId>>>,
}

impl TrajectorySet {
    pub fn new(
        fingerprint: impl Into<String>,
        layer_widths: Vec<usize>,
        trajectories: Vec<Trajectory>,
    ) -> Result<Self> {
        let depth = layer_widths.len();
        let mut position = HashMap::with_capacity(trajectories.len());
        let mut index: Vec<IndexMap<ActivationPattern, Vec<InstanceId>>> =
            vec![IndexMap::new(); depth];
        for (p, t) in trajectories.iter().enumerate() {
            if position.insert(t.instance_id, p).is_some() {
                return Err(Error::Shape(format!(
                    "duplicate instance id {}",
                    t.instance_id
                )));
            }
            if t.patterns.len() != depth {
                return Err(Error::Shape(format!(
                    "instance {} has {} patterns for {depth} layers",
                    t.instance_id,
                    t.patterns.len()
                )));
            }
            for (l, pattern) in t.patterns.iter().enumerate() {
                if pattern.layer() != l + 1 || pattern.len() != layer_widths[l] {
                    return Err(Error::Shape(format!(
                        "instance {}: pattern {pattern} in slot for layer {} of width {}",
                        t.instance_id,
                        l + 1,
                        layer_widths[l]
                    )));
                }
                index[l]
                    .entry(pattern.clone())
                    .or_default()
                    .push(t.instance_id);
            }
        }
        Ok(Self {
            fingerprint: fingerprint.into(),
            layer_widths,
            trajectories,
            position,
            index,
        })
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn depth(&self) -> usize {
        self.layer_widths.len()
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn get(&self, id: InstanceId) -> Option<&Trajectory> {
        self.position.get(&id).map(|&p| &self.trajectories[p])
    }

    pub fn ids(&self) -> IdSet {
        self.trajectories.iter().map(|t| t.instance_id).collect()
    }

    /// Distinct patterns of `layer` (1-based) in first-seen order, with their regions.
    pub fn layer_index(&self, layer: usize) -> &IndexMap<ActivationPattern, Vec<InstanceId>> {
        &self.index[layer - 1]
    }

    pub fn distinct_pattern_counts(&self) -> Vec<usize> {
        self.index.iter().map(IndexMap::len).collect()
    }
}

/// Run every instance through `net` and record its patterns and prediction.
pub fn extract_trajectories(net: &DenseReluNetwork, data: &Dataset) -> Result<TrajectorySet> {
    if data.dim() != net.architecture.input_dim {
        return Err(Error::Shape(format!(
            "dataset dimension {} vs network input {}",
            data.dim(),
            net.architecture.input_dim
        )));
    }
    let depth = net.depth();
    let trajectories = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let trace = net.forward_trace(data.features(i))?;
            let patterns = (1..=depth)
                .map(|l| extract_pattern(&trace, l))
                .collect::<Result<Vec<_>>>()?;
            Ok(Trajectory {
                instance_id: data.ids()[i],
                patterns,
                predicted_label: crate::nn::argmax(&trace.logits) as u32,
                true_label: Some(data.labels()[i]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectorySet::new(
        fingerprint(net),
        net.architecture.hidden_widths.clone(),
        trajectories,
    )
}

/// Ids in `scope` whose pattern at `pattern.layer()` equals `pattern`.
pub fn activation_region(pattern: &ActivationPattern, set: &TrajectorySet, scope: &IdSet) -> IdSet {
    if pattern.layer() == 0 || pattern.layer() > set.depth() {
        return IdSet::new();
    }
    set.layer_index(pattern.layer())
        .get(pattern)
        .map(|ids| ids.iter().copied().filter(|id| scope.contains(id)).collect())
        .unwrap_or_default()
}

/// Intersection of the regions of patterns taken from pairwise distinct layers.
pub fn activation_region_multi(
    patterns: &[ActivationPattern],
    set: &TrajectorySet,
    scope: &IdSet,
) -> Result<IdSet> {
    let mut layers = BTreeSet::new();
    if let Some(dup) = patterns.iter().find(|p| !layers.insert(p.layer())) {
        return Err(Error::InvalidQuery(format!(
            "two query patterns in layer {}",
            dup.layer()
        )));
    }
    let mut region = scope.clone();
    for p in patterns {
        region = activation_region(p, set, &region);
        if region.is_empty() {
            break;
        }
    }
    Ok(region)
}

//! Labeled datasets with stable instance ids.

mod idx;
mod synthetic;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::InstanceId;

pub use idx::{
    encode_idx_images, encode_idx_labels, load_idx_images, load_idx_labels, pair_idx,
    parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels, IdxImages,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Instances stored row-major in one flat buffer. Ids are the positions in
/// the originating file and survive subsetting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    num_classes: usize,
    ids: Vec<InstanceId>,
    features: Vec<f64>,
    labels: Vec<u32>,
}

impl Dataset {
    pub fn new(
        dim: usize,
        num_classes: usize,
        ids: Vec<InstanceId>,
        features: Vec<f64>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("feature dimension must be positive".into()));
        }
        if features.len() != ids.len() * dim || labels.len() != ids.len() {
            return Err(Error::Shape(format!(
                "{} ids, {} labels, {} feature values at dimension {dim}",
                ids.len(),
                labels.len(),
                features.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y as usize >= num_classes) {
            return Err(Error::Index(format!("label {bad} with {num_classes} classes")));
        }
        let mut seen = std::collections::HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|&&id| !seen.insert(id)) {
            return Err(Error::Shape(format!("duplicate instance id {dup}")));
        }
        Ok(Self {
            dim,
            num_classes,
            ids,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn ids(&self) -> &[InstanceId] {
        &self.ids
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Feature vector of the instance at position `i` (not id `i`).
    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position_of(&self, id: InstanceId) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    /// Divide every feature by 255. Applied once, at ingestion of byte data.
    pub fn normalize(&self) -> Dataset {
        Dataset {
            features: self.features.iter().map(|v| v / 255.0).collect(),
            ..self.clone()
        }
    }

    /// Keep the listed ids, in original dataset order.
    pub fn subset_ids(&self, ids: &[InstanceId]) -> Result<Dataset> {
        if ids.is_empty() {
            return Err(Error::Empty("subset must keep at least one instance".into()));
        }
        let position: HashMap<InstanceId, usize> =
            self.ids.iter().enumerate().map(|(p, &id)| (id, p)).collect();
        let mut positions = ids
            .iter()
            .map(|id| {
                position.get(id).copied().ok_or(Error::Unknown {
                    kind: "instance",
                    id: id.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        positions.sort_unstable();
        positions.dedup();
        Ok(self.take_positions(&positions))
    }

    /// Uniform sample of `count` instances without replacement, seeded.
    pub fn subset_random(&self, count: usize, seed: u64) -> Result<Dataset> {
        if count == 0 {
            return Err(Error::Empty("subset must keep at least one instance".into()));
        }
        if count > self.len() {
            return Err(Error::InvalidQuery(format!(
                "subset of {count} from {} instances",
                self.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions = rand::seq::index::sample(&mut rng, self.len(), count).into_vec();
        positions.sort_unstable();
        Ok(self.take_positions(&positions))
    }

    fn take_positions(&self, positions: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(positions.len() * self.dim);
        for &p in positions {
            features.extend_from_slice(self.features(p));
        }
        Dataset {
            dim: self.dim,
            num_classes: self.num_classes,
            ids: positions.iter().map(|&p| self.ids[p]).collect(),
            features,
            labels: positions.iter().map(|&p| self.labels[p]).collect(),
        }
    }
}

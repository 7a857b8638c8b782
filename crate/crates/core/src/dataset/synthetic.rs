use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Isotropic Gaussian blobs, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub points_per_class: usize,
    pub dimension: usize,
    pub class_center_separation: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.points_per_class == 0 || self.dimension == 0 {
            return Err(Error::InvalidConfig(
                "synthetic counts and dimension must be at least 1".into(),
            ));
        }
        if !(self.class_center_separation > 0.0 && self.noise_scale > 0.0) {
            return Err(Error::InvalidConfig(
                "separation and noise scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Class centers sit on an integer lattice with spacing equal to the
/// separation, so any two centers are at least that far apart.
fn class_centers(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let k = spec.num_classes;
    let d = spec.dimension;
    let mut side = 1usize;
    while side.checked_pow(d as u32).is_some_and(|cells| cells < k) {
        side += 1;
    }
    (0..k)
        .map(|c| {
            let mut rest = c;
            (0..d)
                .map(|_| {
                    let digit = rest % side;
                    rest /= side;
                    digit as f64 * spec.class_center_separation
                })
                .collect()
        })
        .collect()
}

/// Instances are interleaved by class: id `i` belongs to class `i % num_classes`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let centers = class_centers(spec);
    let noise = Normal::new(0.0, spec.noise_scale)
        .map_err(|e| Error::InvalidConfig(format!("noise scale: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.num_classes * spec.points_per_class;
    let mut features = Vec::with_capacity(n * spec.dimension);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..spec.points_per_class {
        for (class, center) in centers.iter().enumerate() {
            features.extend(center.iter().map(|c| c + noise.sample(&mut rng)));
            labels.push(class as u32);
        }
    }
    Dataset::new(
        spec.dimension,
        spec.num_classes,
        (0..n as u32).collect(),
        features,
        labels,
    )
}

//! Model checkpoints (one JSON document) and network fingerprints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Architecture, DenseReluNetwork, LayerParams, TrainConfig};

/// Floats are written in shortest round-trip form, so loading a checkpoint
/// restores bit-identical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub architecture: Architecture,
    pub hidden_layers: Vec<LayerParams>,
    pub output_layer: LayerParams,
    pub seed: u64,
    #[serde(default)]
    pub train_config: Option<TrainConfig>,
}

impl Checkpoint {
    pub fn new(net: &DenseReluNetwork, seed: u64, train_config: Option<TrainConfig>) -> Self {
        Self {
            architecture: net.architecture.clone(),
            hidden_layers: net.hidden_layers.clone(),
            output_layer: net.output_layer.clone(),
            seed,
            train_config,
        }
    }

    pub fn network(&self) -> Result<DenseReluNetwork> {
        DenseReluNetwork::from_layers(
            self.architecture.clone(),
            self.hidden_layers.clone(),
            self.output_layer.clone(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        ckpt.network()
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(ckpt)
    }
}

/// SHA-256 over the architecture dimensions and the raw bits of every
/// parameter, hex encoded. Independent of any file formatting.
pub fn fingerprint(net: &DenseReluNetwork) -> String {
    let mut h = Sha256::new();
    let arch = &net.architecture;
    h.update((arch.input_dim as u64).to_le_bytes());
    h.update((arch.hidden_widths.len() as u64).to_le_bytes());
    for &w in &arch.hidden_widths {
        h.update((w as u64).to_le_bytes());
    }
    h.update((arch.output_dim as u64).to_le_bytes());
    for p in net.parameters() {
        h.update(p.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

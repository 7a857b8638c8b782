use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DenseReluNetwork, Gradients};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 500,
            batch_size: 32,
            seed: 0,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Minibatch SGD on the mean softmax cross-entropy of each batch.
///
/// `on_epoch(e, &net)` runs after every epoch with a zero-based epoch index.
/// The result depends only on the initial network, the dataset order and
/// `config`.
pub fn train<F>(
    mut net: DenseReluNetwork,
    data: &Dataset,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<DenseReluNetwork>
where
    F: FnMut(usize, &DenseReluNetwork) -> Result<()>,
{
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    if data.dim() != net.architecture.input_dim {
        return Err(Error::Shape(format!(
            "dataset dimension {} vs network input {}",
            data.dim(),
            net.architecture.input_dim
        )));
    }
    if let Some(&bad) = data
        .labels()
        .iter()
        .find(|&&y| y as usize >= net.architecture.output_dim)
    {
        return Err(Error::Index(format!(
            "label {bad} with {} outputs",
            net.architecture.output_dim
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(config.batch_size) {
            let mut total = Gradients::zeros_like(&net);
            for &i in batch {
                let trace = net.forward_trace(data.features(i))?;
                total.accumulate(&net.backward(&trace, data.labels()[i] as usize)?);
            }
            total.scale(1.0 / batch.len() as f64);
            net.sgd_step(&total, config.learning_rate)
                .map_err(|e| match e {
                    Error::TrainingDiverged(msg) => {
                        Error::TrainingDiverged(format!("epoch {epoch}: {msg}"))
                    }
                    other => other,
                })?;
        }
        on_epoch(epoch, &net)?;
    }
    Ok(net)
}

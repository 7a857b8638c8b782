//! Dense feed-forward ReLU classifier.
//!
//! A network is a stack of hidden layers `x_l = max(0, W_l x_{l-1} + b_l)`
//! followed by a linear output layer producing logits. All arithmetic is
//! `f64`. Forward passes return a full [`ForwardTrace`] so downstream
//! consumers (pattern extraction, backprop) never recompute internals.

mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use train::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Result<Self> {
        let arch = Self {
            input_dim,
            hidden_widths,
            output_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_widths.is_empty() {
            return Err(Error::InvalidArchitecture(
                "at least one hidden layer is required".into(),
            ));
        }
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_widths.contains(&0) {
            return Err(Error::InvalidArchitecture(format!(
                "zero-width layer in {}",
                self
            )));
        }
        Ok(())
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.hidden_widths.len()
    }

    /// `(fan_out, fan_in)` for every affine map, hidden layers first, output last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.depth() + 1);
        let mut fan_in = self.input_dim;
        for &w in &self.hidden_widths {
            shapes.push((w, fan_in));
            fan_in = w;
        }
        shapes.push((self.output_dim, fan_in));
        shapes
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.input_dim)?;
        for w in &self.hidden_widths {
            write!(f, "->{w}")?;
        }
        write!(f, "->{}", self.output_dim)
    }
}

/// One affine map. `weights` is row-major with shape `rows x cols`
/// (`fan_out x fan_in`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            biases: vec![0.0; rows],
        }
    }

    pub fn from_rows(weights: &[&[f64]], biases: &[f64]) -> Result<Self> {
        let rows = weights.len();
        let cols = weights.first().map_or(0, |r| r.len());
        if weights.iter().any(|r| r.len() != cols) || biases.len() != rows {
            return Err(Error::Shape("ragged weight rows or bias length".into()));
        }
        Ok(Self {
            rows,
            cols,
            weights: weights.iter().flat_map(|r| r.iter().copied()).collect(),
            biases: biases.to_vec(),
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols + j]
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows
            || self.cols != cols
            || self.weights.len() != rows * cols
            || self.biases.len() != rows
        {
            return Err(Error::Shape(format!(
                "layer is {}x{} ({} weights, {} biases), expected {rows}x{cols}",
                self.rows,
                self.cols,
                self.weights.len(),
                self.biases.len()
            )));
        }
        if !self.all_finite() {
            return Err(Error::Shape("non-finite parameter".into()));
        }
        Ok(())
    }

    fn all_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }

    /// `W x + b`
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(self.biases[i], |acc, (w, v)| acc + w * v)
            })
            .collect()
    }

    fn add_scaled(&mut self, other: &LayerParams, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += scale * b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += scale * b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseReluNetwork {
    pub architecture: Architecture,
    pub hidden_layers: Vec<LayerParams>,
    pub output_layer: LayerParams,
}

/// Everything computed by one forward pass. Layer vectors are indexed
/// from 0, so `preactivations[0]` is hidden layer 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub preactivations: Vec<Vec<f64>>,
    pub activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

/// Gradient of the loss, shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerParams>,
    pub output: LayerParams,
}

impl Gradients {
    pub fn zeros_like(net: &DenseReluNetwork) -> Self {
        Self {
            hidden: net
                .hidden_layers
                .iter()
                .map(|l| LayerParams::zeros(l.rows, l.cols))
                .collect(),
            output: LayerParams::zeros(net.output_layer.rows, net.output_layer.cols),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.hidden.iter_mut().zip(&other.hidden) {
            a.add_scaled(b, 1.0);
        }
        self.output.add_scaled(&other.output, 1.0);
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in self.hidden.iter_mut().chain(std::iter::once(&mut self.output)) {
            layer.weights.iter_mut().for_each(|w| *w *= factor);
            layer.biases.iter_mut().for_each(|b| *b *= factor);
        }
    }

    fn layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.hidden.iter().chain(std::iter::once(&self.output))
    }
}

impl DenseReluNetwork {
    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights, zero biases,
    /// drawn from a ChaCha8 stream seeded with `seed`.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers: Vec<LayerParams> = arch
            .layer_shapes()
            .into_iter()
            .map(|(rows, cols)| {
                let bound = 1.0 / (cols as f64).sqrt();
                let mut layer = LayerParams::zeros(rows, cols);
                for w in &mut layer.weights {
                    *w = rng.random_range(-bound..=bound);
                }
                layer
            })
            .collect();
        let output_layer = layers.pop().expect("output layer");
        Ok(Self {
            architecture: arch,
            hidden_layers: layers,
            output_layer,
        })
    }

    /// Assemble a network from explicit parameters, validating every shape.
    pub fn from_layers(
        architecture: Architecture,
        hidden_layers: Vec<LayerParams>,
        output_layer: LayerParams,
    ) -> Result<Self> {
        let net = Self {
            architecture,
            hidden_layers,
            output_layer,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        let shapes = self.architecture.layer_shapes();
        if self.hidden_layers.len() + 1 != shapes.len() {
            return Err(Error::Shape(format!(
                "{} hidden layers for architecture {}",
                self.hidden_layers.len(),
                self.architecture
            )));
        }
        for (layer, &(rows, cols)) in self.all_layers().zip(&shapes) {
            layer.check(rows, cols)?;
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.hidden_layers.len()
    }

    fn all_layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.hidden_layers
            .iter()
            .chain(std::iter::once(&self.output_layer))
    }

    fn all_layers_mut(&mut self) -> impl Iterator<Item = &mut LayerParams> {
        self.hidden_layers
            .iter_mut()
            .chain(std::iter::once(&mut self.output_layer))
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.architecture.input_dim {
            return Err(Error::Shape(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.architecture.input_dim
            )));
        }
        let mut preactivations = Vec::with_capacity(self.depth());
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        for layer in &self.hidden_layers {
            let prev = activations.last().map_or(x, |a| a.as_slice());
            let pre = layer.affine(prev);
            activations.push(pre.iter().map(|&v| v.max(0.0)).collect());
            preactivations.push(pre);
        }
        let logits = self
            .output_layer
            .affine(activations.last().expect("at least one hidden layer"));
        Ok(ForwardTrace {
            input: x.to_vec(),
            preactivations,
            activations,
            logits,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward_trace(x)?.logits))
    }

    /// Exact gradient of [`loss_softmax_xent`] for one example. The ReLU
    /// derivative at a preactivation of exactly zero is taken as zero.
    pub fn backward(&self, trace: &ForwardTrace, label: usize) -> Result<Gradients> {
        let depth = self.depth();
        if trace.preactivations.len() != depth
            || trace.activations.len() != depth
            || trace.logits.len() != self.architecture.output_dim
            || trace.input.len() != self.architecture.input_dim
            || trace
                .preactivations
                .iter()
                .zip(&self.architecture.hidden_widths)
                .any(|(p, &w)| p.len() != w)
        {
            return Err(Error::Shape("trace does not match network".into()));
        }
        if label >= self.architecture.output_dim {
            return Err(Error::Index(format!(
                "label {label} with {} classes",
                self.architecture.output_dim
            )));
        }

        let mut delta = softmax(&trace.logits);
        delta[label] -= 1.0;

        let mut grads = Gradients::zeros_like(self);
        outer_into(&mut grads.output, &delta, &trace.activations[depth - 1]);

        let mut upstream = &self.output_layer;
        for l in (0..depth).rev() {
            let mut next = vec![0.0; upstream.cols];
            for (i, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (n, w) in next.iter_mut().zip(upstream.row(i)) {
                        *n += w * d;
                    }
                }
            }
            for (n, &pre) in next.iter_mut().zip(&trace.preactivations[l]) {
                if pre <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
            let input = if l == 0 {
                &trace.input
            } else {
                &trace.activations[l - 1]
            };
            outer_into(&mut grads.hidden[l], &delta, input);
            upstream = &self.hidden_layers[l];
        }
        Ok(grads)
    }

    /// Plain SGD: `theta <- theta - lr * grad`. Rejects non-finite gradients
    /// before touching any parameter.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if grads.hidden.len() != self.hidden_layers.len()
            || self
                .all_layers()
                .zip(grads.layers())
                .any(|(p, g)| p.rows != g.rows || p.cols != g.cols)
        {
            return Err(Error::Shape("gradient shapes do not match network".into()));
        }
        if !grads.layers().all(LayerParams::all_finite) {
            return Err(Error::TrainingDiverged("non-finite gradient entry".into()));
        }
        for (p, g) in self.all_layers_mut().zip(grads.layers()) {
            p.add_scaled(g, -learning_rate);
        }
        Ok(())
    }

    /// Accuracy plus one correctness flag per instance, in dataset order.
    pub fn evaluate(&self, data: &Dataset) -> Result<Evaluation> {
        if data.is_empty() {
            return Err(Error::Empty("cannot evaluate on an empty dataset".into()));
        }
        let predicted = self.predict_all(data)?;
        let correct: Vec<bool> = predicted
            .iter()
            .zip(data.labels())
            .map(|(&p, &y)| p == y as usize)
            .collect();
        let hits = correct.iter().filter(|&&c| c).count();
        Ok(Evaluation {
            accuracy: hits as f64 / correct.len() as f64,
            ids: data.ids().to_vec(),
            predicted,
            correct,
        })
    }

    /// Predicted labels for every instance, in dataset order.
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<usize>> {
        if data.dim() != self.architecture.input_dim {
            return Err(Error::Shape(format!(
                "dataset dimension {} vs network input {}",
                data.dim(),
                self.architecture.input_dim
            )));
        }
        (0..data.len())
            .into_par_iter()
            .map(|i| self.predict(data.features(i)))
            .collect()
    }

    /// All parameters in canonical order: per layer, weights then biases.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.all_layers()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub ids: Vec<u32>,
    pub predicted: Vec<usize>,
    pub correct: Vec<bool>,
}

fn outer_into(out: &mut LayerParams, delta: &[f64], input: &[f64]) {
    for (i, &d) in delta.iter().enumerate() {
        out.biases[i] = d;
        let row = &mut out.weights[i * out.cols..(i + 1) * out.cols];
        for (w, &x) in row.iter_mut().zip(input) {
            *w = d * x;
        }
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[label]`, evaluated as `logsumexp(z - max) - (z_label - max)`.
pub fn loss_softmax_xent(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::Index(format!(
            "label {label} with {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
    Ok((sum.ln() - (logits[label] - max)).max(0.0))
}

//! Independent reference implementations shared by the integration tests
//! and the acceptance suite. Nothing here calls the code paths it checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use apdkit::nn::{loss_softmax_xent, Architecture, DenseReluNetwork, Gradients};
use apdkit::patterns::{ActivationPattern, Trajectory, TrajectorySet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One instance as plain data: per-layer bit vectors and a label.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub id: u32,
    pub layers: Vec<Vec<u8>>,
    pub label: u32,
}

pub fn random_raw_set(rng: &mut impl Rng, max_instances: usize, max_layers: usize, max_labels: u32) -> Vec<RawInstance> {
    let n = rng.random_range(1..=max_instances);
    let depth = rng.random_range(1..=max_layers);
    let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=3)).collect();
    let labels = rng.random_range(1..=max_labels);
    // A few prototypes per layer so that instances collide often.
    let protos: Vec<Vec<Vec<u8>>> = widths
        .iter()
        .map(|&w| {
            (0..3)
                .map(|_| (0..w).map(|_| rng.random_range(0..=1)).collect())
                .collect()
        })
        .collect();
    (0..n as u32)
        .map(|id| RawInstance {
            id: id * 3 + 1,
            layers: protos
                .iter()
                .map(|p| p[rng.random_range(0..p.len())].clone())
                .collect(),
            label: rng.random_range(0..labels),
        })
        .collect()
}

pub fn to_trajectory_set(raw: &[RawInstance], fingerprint: &str) -> TrajectorySet {
    let widths = raw[0].layers.iter().map(Vec::len).collect();
    let trajectories = raw
        .iter()
        .map(|r| Trajectory {
            instance_id: r.id,
            patterns: r
                .layers
                .iter()
                .enumerate()
                .map(|(l, b)| ActivationPattern::from_slice(l + 1, b))
                .collect(),
            predicted_label: r.label,
            true_label: Some(r.label),
        })
        .collect();
    TrajectorySet::new(fingerprint, widths, trajectories).unwrap()
}

fn reference_entropy(labels: &[u32]) -> f64 {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1.0;
    }
    let n = labels.len() as f64;
    counts.values().map(|c| -(c / n) * (c / n).log2()).sum()
}

/// Recursive reference: starting after the last layer, group a cluster by
/// the patterns of the previous layer and recurse into the groups when the
/// information gain exceeds 1e-12. Returns the final clusters as sorted id lists.
pub fn brute_force_partition(raw: &[RawInstance]) -> BTreeSet<Vec<u32>> {
    fn recurse(raw: &[&RawInstance], layer: usize, out: &mut BTreeSet<Vec<u32>>) {
        if layer == 1 || raw.len() == 1 {
            let mut ids: Vec<u32> = raw.iter().map(|r| r.id).collect();
            ids.sort();
            out.insert(ids);
            return;
        }
        let mut groups: BTreeMap<&Vec<u8>, Vec<&RawInstance>> = BTreeMap::new();
        for r in raw {
            groups.entry(&r.layers[layer - 2]).or_default().push(r);
        }
        let parent: Vec<u32> = raw.iter().map(|r| r.label).collect();
        let n = parent.len() as f64;
        let weighted: f64 = groups
            .values()
            .map(|g| {
                let labels: Vec<u32> = g.iter().map(|r| r.label).collect();
                labels.len() as f64 / n * reference_entropy(&labels)
            })
            .sum();
        if reference_entropy(&parent) - weighted > 1e-12 {
            for g in groups.values() {
                recurse(g, layer - 1, out);
            }
        } else {
            let mut ids: Vec<u32> = raw.iter().map(|r| r.id).collect();
            ids.sort();
            out.insert(ids);
        }
    }
    let depth = raw[0].layers.len();
    let all: Vec<&RawInstance> = raw.iter().collect();
    let mut out = BTreeSet::new();
    recurse(&all, depth + 1, &mut out);
    out
}

/// Largest relative deviation between `analytic` and central differences
/// with step `h`, where relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn finite_difference_error(net: &DenseReluNetwork, x: &[f64], label: usize, analytic: &Gradients, h: f64) -> f64 {
    let loss = |n: &DenseReluNetwork| {
        loss_softmax_xent(&n.forward_trace(x).unwrap().logits, label).unwrap()
    };
    let n_layers = net.hidden_layers.len() + 1;
    let mut worst: f64 = 0.0;
    for layer in 0..n_layers {
        let (rows, cols) = {
            let p = if layer < net.hidden_layers.len() { &net.hidden_layers[layer] } else { &net.output_layer };
            (p.rows, p.cols)
        };
        let grad = if layer < net.hidden_layers.len() { &analytic.hidden[layer] } else { &analytic.output };
        for k in 0..rows * cols + rows {
            let bump = |delta: f64| {
                let mut m = net.clone();
                let p = if layer < m.hidden_layers.len() { &mut m.hidden_layers[layer] } else { &mut m.output_layer };
                if k < rows * cols {
                    p.weights[k] += delta;
                } else {
                    p.biases[k - rows * cols] += delta;
                }
                loss(&m)
            };
            let numeric = (bump(h) - bump(-h)) / (2.0 * h);
            let a = if k < rows * cols { grad.weights[k] } else { grad.biases[k - rows * cols] };
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

/// Multi-class perceptron; returns training accuracy after `epochs` passes.
pub fn perceptron_accuracy(xs: &[Vec<f64>], ys: &[usize], classes: usize, epochs: usize) -> f64 {
    let d = xs[0].len();
    let mut w = vec![vec![0.0; d + 1]; classes];
    let score = |w: &Vec<Vec<f64>>, x: &[f64]| -> usize {
        let s: Vec<f64> = w.iter().map(|wc| wc[d] + wc.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).collect();
        let mut best = 0;
        for i in 1..classes {
            if s[i] > s[best] {
                best = i;
            }
        }
        best
    };
    for _ in 0..epochs {
        for (x, &y) in xs.iter().zip(ys) {
            let p = score(&w, x);
            if p != y {
                for j in 0..d {
                    w[y][j] += x[j];
                    w[p][j] -= x[j];
                }
                w[y][d] += 1.0;
                w[p][d] -= 1.0;
            }
        }
    }
    let hits = xs.iter().zip(ys).filter(|(x, &y)| score(&w, x) == y).count();
    hits as f64 / xs.len() as f64
}

/// Random architecture, network and input whose preactivations all stay
/// clear of the ReLU kink, so central differences are meaningful.
pub fn random_case(rng: &mut ChaCha8Rng, seed: u64) -> (DenseReluNetwork, Vec<f64>, usize) {
    loop {
        let depth = rng.random_range(1..=3);
        let widths = (0..depth).map(|_| rng.random_range(1..=4)).collect();
        let input = rng.random_range(1..=6);
        let output = rng.random_range(2..=5);
        let arch = Architecture::new(input, widths, output).unwrap();
        let mut net = DenseReluNetwork::init(arch, seed).unwrap();
        for layer in net.hidden_layers.iter_mut().chain(std::iter::once(&mut net.output_layer)) {
            for b in layer.biases.iter_mut() {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let x: Vec<f64> = (0..input).map(|_| rng.random_range(-2.0..2.0)).collect();
        let trace = net.forward_trace(&x).unwrap();
        if trace.preactivations.iter().flatten().all(|z| z.abs() > 1e-3) {
            return (net, x, rng.random_range(0..output));
        }
    }
}

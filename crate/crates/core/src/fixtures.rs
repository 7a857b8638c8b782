//! Small hand-built inputs with known answers, used by tests, the CLI demo
//! and the Python bindings.

use crate::nn::{Architecture, DenseReluNetwork, LayerParams};
use crate::patterns::{ActivationPattern, Trajectory, TrajectorySet};

/// A 4 -> [5, 5, 5] -> 3 network and an input whose patterns are
/// `[1,0,1,1,0]`, `[0,1,1,0,0]`, `[1,1,1,1,0]` and whose predicted label is 2.
pub fn five_unit_network() -> (DenseReluNetwork, Vec<f64>) {
    let layer = |rows: &[&[f64]], biases: &[f64]| {
        LayerParams::from_rows(rows, biases).expect("fixture shapes")
    };
    let h1 = layer(
        &[
            &[0.5, 0.5, 0.0, 0.0],
            &[-1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.25, 0.25, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, -0.5, 0.0, -0.5],
        ],
        &[0.0; 5],
    );
    let h2 = layer(
        &[
            &[-1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 2.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0, 0.0],
        ],
        &[0.0, 0.0, 0.0, 0.0, -0.5],
    );
    let h3 = layer(
        &[
            &[0.0, 1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0, 1.0, 1.0, 0.0, 0.0],
            &[0.0, 0.5, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 0.0, 0.0, 0.0],
        ],
        &[0.0; 5],
    );
    let out = layer(
        &[
            &[1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0],
        ],
        &[0.0; 3],
    );
    let arch = Architecture::new(4, vec![5, 5, 5], 3).expect("fixture architecture");
    let net = DenseReluNetwork::from_layers(arch, vec![h1, h2, h3], out).expect("fixture network");
    (net, vec![1.0, 1.0, 1.0, 1.0])
}

/// Per-instance patterns of the seven-instance, three-layer example used
/// throughout the docs. Labels: instances 0-1 -> 0, 2-3 -> 1, 4-6 -> 2.
pub const SEVEN_INSTANCE_PATTERNS: [([[u8; 5]; 3], u32); 7] = [
    ([[1, 1, 1, 1, 0], [0, 1, 1, 0, 0], [1, 0, 0, 0, 1]], 0),
    ([[1, 0, 0, 1, 1], [0, 1, 1, 0, 0], [1, 0, 0, 0, 1]], 0),
    ([[1, 0, 0, 1, 1], [1, 0, 1, 0, 0], [0, 0, 1, 1, 1]], 1),
    ([[1, 0, 0, 1, 1], [1, 1, 1, 1, 0], [0, 0, 1, 1, 1]], 1),
    ([[1, 0, 0, 1, 0], [1, 1, 1, 1, 0], [0, 0, 1, 1, 1]], 2),
    ([[1, 0, 0, 1, 0], [1, 1, 1, 1, 0], [0, 0, 1, 1, 1]], 2),
    ([[1, 0, 0, 1, 0], [1, 1, 1, 1, 0], [0, 0, 1, 1, 1]], 2),
];

pub const SEVEN_INSTANCE_FINGERPRINT: &str = "seven-instance-example";

pub fn seven_instance_trajectories() -> TrajectorySet {
    let trajectories = SEVEN_INSTANCE_PATTERNS
        .iter()
        .enumerate()
        .map(|(id, (layers, label))| Trajectory {
            instance_id: id as u32,
            patterns: layers
                .iter()
                .enumerate()
                .map(|(l, bits)| ActivationPattern::from_slice(l + 1, bits))
                .collect(),
            predicted_label: *label,
            true_label: Some(*label),
        })
        .collect();
    TrajectorySet::new(SEVEN_INSTANCE_FINGERPRINT, vec![5, 5, 5], trajectories)
        .expect("fixture trajectories")
}

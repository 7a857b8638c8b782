use std::collections::{BTreeMap, BTreeSet};

use apdkit::apd::{build_apd, Stability};
use apdkit::clustering::{information_gain, split, Anchor};
use apdkit::fixtures::{five_unit_network, seven_instance_trajectories};
use apdkit::monitor::{compute_events, PredictionHistory};
use apdkit::patterns::{activation_region, activation_region_multi, extract_pattern, ActivationPattern};
use apdkit::report::{size_distribution, Report};
use apdkit::IdSet;

fn pattern(layer: usize, bits: &[u8]) -> ActivationPattern {
    ActivationPattern::from_slice(layer, bits)
}

/// Plain nested-loop forward pass, kept separate from the library's.
#[allow(clippy::needless_range_loop)]
fn straight_line_logits(net: &apdkit::nn::DenseReluNetwork, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for layer in &net.hidden_layers {
        let mut next = vec![0.0; layer.rows];
        for i in 0..layer.rows {
            let mut s = layer.biases[i];
            for j in 0..layer.cols {
                s += layer.weights[i * layer.cols + j] * h[j];
            }
            next[i] = if s > 0.0 { s } else { 0.0 };
        }
        h = next;
    }
    let o = &net.output_layer;
    (0..o.rows)
        .map(|i| o.biases[i] + (0..o.cols).map(|j| o.weights[i * o.cols + j] * h[j]).sum::<f64>())
        .collect()
}

#[test]
fn five_unit_network_patterns_and_label() {
    let (net, x) = five_unit_network();
    let trace = net.forward_trace(&x).unwrap();
    let expected: [&[u8]; 3] = [&[1, 0, 1, 1, 0], &[0, 1, 1, 0, 0], &[1, 1, 1, 1, 0]];
    for (l, bits) in expected.iter().enumerate() {
        assert_eq!(extract_pattern(&trace, l + 1).unwrap(), pattern(l + 1, bits));
    }
    let logits = straight_line_logits(&net, &x);
    let mut best = 0;
    for i in 1..logits.len() {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    assert_eq!(best, 2);
    assert_eq!(net.predict(&x).unwrap(), best);
    assert_eq!(trace.logits, logits);
}

#[test]
fn seven_instance_pattern_counts_and_regions() {
    let set = seven_instance_trajectories();
    assert_eq!(set.distinct_pattern_counts(), vec![3, 3, 2]);
    let all = set.ids();
    assert_eq!(
        activation_region(&pattern(2, &[0, 1, 1, 0, 0]), &set, &all),
        IdSet::from([0, 1])
    );
    let joint = activation_region_multi(
        &[pattern(1, &[1, 0, 0, 1, 1]), pattern(2, &[1, 1, 1, 1, 0])],
        &set,
        &all,
    )
    .unwrap();
    assert_eq!(joint, IdSet::from([3]));
    assert!(activation_region_multi(
        &[pattern(1, &[1, 0, 0, 1, 1]), pattern(1, &[1, 0, 0, 1, 0])],
        &set,
        &all
    )
    .is_err());
}

#[test]
fn seven_instance_apd_structure() {
    let set = seven_instance_trajectories();
    let apd = build_apd(&set).unwrap();
    apd.check_invariants(&set).unwrap();
    assert_eq!(apd.nodes().len(), 8);
    assert_eq!(apd.edges().len(), 8);
    let stats = apd.stats();
    assert_eq!(stats.nodes_per_layer, vec![3, 3, 2]);
    assert_eq!(stats.edges_per_transition, vec![5, 3]);
    assert_eq!(stats.support_per_transition, vec![7, 7]);

    let l3 = apd.node_of(&pattern(3, &[0, 0, 1, 1, 1])).unwrap();
    let l22 = apd.node_of(&pattern(2, &[1, 0, 1, 0, 0])).unwrap();
    let l23 = apd.node_of(&pattern(2, &[1, 1, 1, 1, 0])).unwrap();
    assert_eq!(apd.predecessors(l3).unwrap(), &BTreeSet::from([l22, l23]));
    assert_eq!(apd.support(l23, l3).unwrap(), &[3, 4, 5, 6]);

    let path = apd.instance_path(&set, 3).unwrap();
    let expected: Vec<usize> = [
        pattern(1, &[1, 0, 0, 1, 1]),
        pattern(2, &[1, 1, 1, 1, 0]),
        pattern(3, &[0, 0, 1, 1, 1]),
    ]
    .iter()
    .map(|p| apd.node_of(p).unwrap())
    .collect();
    assert_eq!(path, expected);
}

#[test]
fn seven_instance_stability() {
    let set = seven_instance_trajectories();
    let apd = build_apd(&set).unwrap();
    let stability = apd.classify_stability(&set).unwrap();
    let of = |l: usize, bits: &[u8]| stability[apd.node_of(&pattern(l, bits)).unwrap()];
    assert_eq!(of(1, &[1, 1, 1, 1, 0]), Stability::Stable);
    assert_eq!(of(1, &[1, 0, 0, 1, 1]), Stability::Unstable);
    assert_eq!(of(1, &[1, 0, 0, 1, 0]), Stability::Stable);
    assert_eq!(of(2, &[0, 1, 1, 0, 0]), Stability::Stable);
    assert_eq!(of(2, &[1, 1, 1, 1, 0]), Stability::Unstable);
    assert_eq!(of(3, &[1, 0, 0, 0, 1]), Stability::Stable);
    assert_eq!(of(3, &[0, 0, 1, 1, 1]), Stability::Unstable);
}

#[test]
fn seven_instance_golden_partition() {
    let set = seven_instance_trajectories();
    let apd = build_apd(&set).unwrap();
    let p = split(&apd, &set).unwrap();
    let ids: Vec<Vec<u32>> = p.clusters.iter().map(|c| c.instance_ids.clone()).collect();
    assert_eq!(ids, vec![vec![0, 1], vec![2], vec![3], vec![4, 5, 6]]);
    let depths: Vec<usize> = p.clusters.iter().map(|c| c.depth).collect();
    assert_eq!(depths, vec![3, 2, 1, 1]);
    assert!(p.clusters.iter().all(|c| c.anchor != Anchor::Out));

    let accepted: Vec<f64> = p.history.iter().filter(|r| r.accepted).map(|r| r.information_gain).collect();
    assert_eq!(accepted.len(), 3);
    assert!((accepted[1] - 0.321_928_094_887_362_3).abs() < 1e-12);
    assert!((accepted[2] - 0.811_278_124_459_132_8).abs() < 1e-12);
    let rejected: Vec<&Vec<u32>> = p.history.iter().filter(|r| !r.accepted).map(|r| &r.parent_ids).collect();
    assert_eq!(rejected, vec![&vec![0, 1]]);

    let replayed = p.replay_history(&[0, 1, 2, 3, 4, 5, 6]).unwrap();
    assert_eq!(replayed, ids.into_iter().collect());
}

#[test]
fn seven_instance_gains_match_hand_computation() {
    let g = information_gain(&[1, 1, 2, 2, 2], &[vec![1], vec![1, 2, 2, 2]]).unwrap();
    let h = |ps: &[f64]| -> f64 { ps.iter().map(|p| -p * p.log2()).sum() };
    let expected = h(&[0.4, 0.6]) - 0.8 * h(&[0.25, 0.75]);
    assert!((g - expected).abs() < 1e-12);
}

#[test]
fn seven_instance_report() {
    let set = seven_instance_trajectories();
    let apd = build_apd(&set).unwrap();
    let p = split(&apd, &set).unwrap();
    let dist = size_distribution(&p).unwrap();
    let mut sizes = dist.sizes.clone();
    sizes.sort();
    assert_eq!(sizes, vec![1, 1, 2, 3]);
    assert_eq!(dist.summary.mean, 1.75);

    let correct: BTreeMap<u32, bool> = (0..7).map(|id| (id, id != 2)).collect();
    let mut h = PredictionHistory::new((0..7).collect());
    h.push_epoch(0, &[0, 0, 1, 1, 2, 2, 2]).unwrap();
    let stats = compute_events(&h, &[0, 0, 1, 1, 2, 2, 2]).unwrap();
    let report = Report::compute(&p, &correct, &stats).unwrap();
    assert_eq!(report.histogram.wrong_sizes, vec![1]);
    let mut right = report.histogram.correct_sizes.clone();
    right.sort();
    assert_eq!(right, vec![1, 2, 2, 3, 3, 3]);
}

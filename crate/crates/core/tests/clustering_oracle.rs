mod support;

use std::collections::{BTreeMap, BTreeSet};

use apdkit::apd::build_apd;
use apdkit::clustering::{entropy, information_gain, split};
use apdkit::monitor::{compute_events, PredictionHistory};
use apdkit::patterns::activation_region;
use apdkit::report::cumulative_curves;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn split_matches_brute_force_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..300 {
        let raw = support::random_raw_set(&mut rng, 14, 4, 3);
        let set = support::to_trajectory_set(&raw, "oracle");
        let apd = build_apd(&set).unwrap();
        let got: BTreeSet<Vec<u32>> = split(&apd, &set)
            .unwrap()
            .clusters
            .into_iter()
            .map(|c| c.instance_ids)
            .collect();
        assert_eq!(got, support::brute_force_partition(&raw), "case {case}: {raw:?}");
    }
}

fn raw_sets() -> impl Strategy<Value = Vec<support::RawInstance>> {
    any::<u64>().prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        support::random_raw_set(&mut rng, 20, 4, 4)
    })
}

proptest! {
    #[test]
    fn apd_is_layered_and_conserves_support(raw in raw_sets()) {
        let set = support::to_trajectory_set(&raw, "p");
        let apd = build_apd(&set).unwrap();
        apd.check_invariants(&set).unwrap();
        for (&(from, to), ids) in apd.edges() {
            let lf = apd.nodes()[from].pattern.layer();
            let lt = apd.nodes()[to].pattern.layer();
            prop_assert_eq!(lf + 1, lt);
            prop_assert!(!ids.is_empty());
        }
        for total in apd.stats().support_per_transition {
            prop_assert_eq!(total, raw.len());
        }
    }

    #[test]
    fn regions_partition_each_layer(raw in raw_sets()) {
        let set = support::to_trajectory_set(&raw, "p");
        let all = set.ids();
        for layer in 1..=set.depth() {
            let mut seen = BTreeSet::new();
            for (pattern, ids) in set.layer_index(layer) {
                let region = activation_region(pattern, &set, &all);
                prop_assert_eq!(region.iter().copied().collect::<Vec<_>>(), ids.clone());
                for id in region {
                    prop_assert!(seen.insert(id));
                }
            }
            prop_assert_eq!(&seen, &all);
        }
    }

    #[test]
    fn partition_is_a_disjoint_cover(raw in raw_sets()) {
        let set = support::to_trajectory_set(&raw, "p");
        let apd = build_apd(&set).unwrap();
        let p = split(&apd, &set).unwrap();
        let mut seen = BTreeSet::new();
        for c in &p.clusters {
            prop_assert!(!c.instance_ids.is_empty());
            for &id in &c.instance_ids {
                prop_assert!(seen.insert(id));
            }
        }
        prop_assert_eq!(seen, set.ids());
        for r in &p.history {
            prop_assert!(r.information_gain >= 0.0);
            prop_assert_eq!(r.accepted, r.information_gain > 0.0);
        }
        let root: Vec<u32> = set.ids().into_iter().collect();
        let replayed = p.replay_history(&root).unwrap();
        prop_assert_eq!(replayed, p.clusters.iter().map(|c| c.instance_ids.clone()).collect());
    }

    #[test]
    fn gain_is_non_negative_and_bounded(labels in prop::collection::vec(0u32..4, 1..40), cuts in prop::collection::vec(0usize..4, 1..40)) {
        let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(cuts[i % cuts.len()]).or_default().push(l);
        }
        let children: Vec<Vec<u32>> = groups.into_values().collect();
        let g = information_gain(&labels, &children).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!(g <= entropy(&labels).unwrap() + 1e-12);
    }

    #[test]
    fn cumulative_curves_are_monotone(raw in raw_sets(), flags in prop::collection::vec(any::<bool>(), 20), epochs in prop::collection::vec(prop::collection::vec(0u32..4, 20), 1..6)) {
        let set = support::to_trajectory_set(&raw, "p");
        let apd = build_apd(&set).unwrap();
        let p = split(&apd, &set).unwrap();
        let ids: Vec<u32> = raw.iter().map(|r| r.id).collect();
        let correct: BTreeMap<u32, bool> = ids.iter().enumerate().map(|(i, &id)| (id, flags[i])).collect();
        let mut h = PredictionHistory::new(ids.clone());
        for (e, preds) in epochs.iter().enumerate() {
            h.push_epoch(e, &preds[..ids.len()]).unwrap();
        }
        let labels: Vec<u32> = raw.iter().map(|r| r.label).collect();
        let stats = compute_events(&h, &labels).unwrap();
        let curves = cumulative_curves(&p, &correct, &stats).unwrap();
        for w in curves.rows.windows(2) {
            prop_assert!(w[0].size <= w[1].size);
            prop_assert!(w[0].cum_instances <= w[1].cum_instances);
            prop_assert!(w[0].cum_errors <= w[1].cum_errors);
            prop_assert!(w[0].cum_forgetting <= w[1].cum_forgetting);
        }
        let last = curves.rows.last().unwrap();
        prop_assert_eq!(last.cum_instances, 1.0);
        prop_assert_eq!(last.cum_errors, if flags[..ids.len()].iter().all(|&f| f) { 0.0 } else { 1.0 });
    }
}

use std::collections::BTreeMap;

use crate::error::{Error, Result};

fn counts(labels: &[u32]) -> BTreeMap<u32, usize> {
    let mut c = BTreeMap::new();
    for &l in labels {
        *c.entry(l).or_insert(0) += 1;
    }
    c
}

fn entropy_of_counts(counts: &BTreeMap<u32, usize>, total: usize) -> f64 {
    let n = total as f64;
    let h: f64 = counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Shannon entropy in bits of a label multiset.
pub fn entropy(labels: &[u32]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("entropy of an empty multiset".into()));
    }
    Ok(entropy_of_counts(&counts(labels), labels.len()))
}

/// `H(parent) - sum_i |child_i|/|parent| * H(child_i)` in bits.
///
/// The gain is mutual information between child membership and label, so it
/// is zero exactly when every child has the parent's label proportions. That
/// case is detected with integer arithmetic and reported as `0.0`; otherwise
/// the result is strictly positive even if rounding would say otherwise.
pub fn information_gain(parent: &[u32], children: &[Vec<u32>]) -> Result<f64> {
    let parent_counts = counts(parent);
    let mut merged: BTreeMap<u32, usize> = BTreeMap::new();
    for child in children {
        for &l in child {
            *merged.entry(l).or_insert(0) += 1;
        }
    }
    if merged != parent_counts {
        return Err(Error::InvalidSplit(
            "children are not a partition of the parent multiset".into(),
        ));
    }
    if parent.is_empty() {
        return Err(Error::Empty("information gain of an empty parent".into()));
    }

    let n = parent.len();
    let mut independent = true;
    let mut weighted = 0.0;
    for child in children.iter().filter(|c| !c.is_empty()) {
        let cc = counts(child);
        let m = child.len();
        independent &= parent_counts
            .iter()
            .all(|(label, &pk)| m * pk == n * cc.get(label).copied().unwrap_or(0));
        weighted += (m as f64 / n as f64) * entropy_of_counts(&cc, m);
    }
    if independent {
        return Ok(0.0);
    }
    let gain = entropy_of_counts(&parent_counts, n) - weighted;
    Ok(gain.max(f64::MIN_POSITIVE))
}

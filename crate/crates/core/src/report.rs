//! Cluster-size analyses and their CSV / JSON serialization.
//!
//! Every analysis attributes each instance to the size of its cluster.
//! Conventions: the median is the lower median, quartiles use the lower
//! nearest rank `sorted[floor((n - 1) p)]`, log bins are `[2^k, 2^(k+1) - 1]`,
//! and clusters are ranked by ascending size with ties broken by anchor node
//! id (the out node last) and then by smallest member id.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::Partition;
use crate::error::{Error, Result};
use crate::monitor::ForgettingStats;
use crate::InstanceId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub count: usize,
    pub min: usize,
    pub q1: usize,
    pub median: usize,
    pub q3: usize,
    pub max: usize,
    pub mean: f64,
}

impl SizeSummary {
    pub fn from_sizes(sizes: &[usize]) -> Option<Self> {
        if sizes.is_empty() {
            return None;
        }
        let mut s = sizes.to_vec();
        s.sort_unstable();
        let n = s.len();
        let rank = |p: f64| s[((n - 1) as f64 * p).floor() as usize];
        Some(Self {
            count: n,
            min: s[0],
            q1: rank(0.25),
            median: s[(n - 1) / 2],
            q3: rank(0.75),
            max: s[n - 1],
            mean: s.iter().sum::<usize>() as f64 / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistribution {
    /// One entry per cluster, in partition order.
    pub sizes: Vec<usize>,
    pub summary: SizeSummary,
}

pub fn size_distribution(partition: &Partition) -> Result<SizeDistribution> {
    let sizes = partition.cluster_sizes();
    let summary = SizeSummary::from_sizes(&sizes)
        .ok_or_else(|| Error::Empty("partition has no clusters".into()))?;
    Ok(SizeDistribution { sizes, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForgettingBin {
    pub lo: usize,
    pub hi: usize,
    /// `None` when no instance falls in the bin.
    pub mean: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedForgetting {
    pub bins: Vec<ForgettingBin>,
}

fn bin_index(size: usize) -> usize {
    debug_assert!(size >= 1);
    (usize::BITS - 1 - size.leading_zeros()) as usize
}

fn forgetting_of(stats: &ForgettingStats, id: InstanceId) -> Result<usize> {
    stats
        .get(id)
        .map(|e| e.forgetting_events)
        .ok_or_else(|| Error::Pairing(format!("no forgetting statistics for instance {id}")))
}

fn flag_of(flags: &BTreeMap<InstanceId, bool>, id: InstanceId) -> Result<bool> {
    flags
        .get(&id)
        .copied()
        .ok_or_else(|| Error::Pairing(format!("no correctness flag for instance {id}")))
}

/// Mean forgetting count per log2-binned cluster size. Bins run from `[1, 1]`
/// up to the bin holding the largest cluster, empty ones included.
pub fn forgetting_by_binned_size(
    partition: &Partition,
    stats: &ForgettingStats,
) -> Result<BinnedForgetting> {
    let max = partition
        .cluster_sizes()
        .into_iter()
        .max()
        .ok_or_else(|| Error::Empty("partition has no clusters".into()))?;
    let nbins = bin_index(max) + 1;
    let mut sums = vec![0usize; nbins];
    let mut counts = vec![0usize; nbins];
    for cluster in &partition.clusters {
        let b = bin_index(cluster.len());
        for &id in &cluster.instance_ids {
            sums[b] += forgetting_of(stats, id)?;
            counts[b] += 1;
        }
    }
    let bins = (0..nbins)
        .map(|k| ForgettingBin {
            lo: 1 << k,
            hi: (1 << (k + 1)) - 1,
            mean: (counts[k] > 0).then(|| sums[k] as f64 / counts[k] as f64),
            count: counts[k],
        })
        .collect();
    Ok(BinnedForgetting { bins })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulativeRow {
    pub rank: usize,
    /// Index into `partition.clusters`.
    pub cluster: usize,
    pub size: usize,
    pub cum_instances: f64,
    pub cum_errors: f64,
    pub cum_forgetting: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurves {
    pub rows: Vec<CumulativeRow>,
    pub instances_ninety: usize,
    /// `None` when there are no errors (the curve is then all zero).
    pub errors_ninety: Option<usize>,
    /// `None` when there are no forgetting events.
    pub forgetting_ninety: Option<usize>,
}

/// Cluster indices in ascending size order.
pub fn size_order(partition: &Partition) -> Vec<usize> {
    let mut order: Vec<usize> = (0..partition.clusters.len()).collect();
    order.sort_by_key(|&c| {
        let cl = &partition.clusters[c];
        (
            cl.len(),
            cl.anchor.node().unwrap_or(usize::MAX),
            cl.instance_ids.first().copied(),
        )
    });
    order
}

struct Running {
    total: usize,
    acc: usize,
    ninety: Option<usize>,
}

impl Running {
    fn new(total: usize) -> Self {
        Self {
            total,
            acc: 0,
            ninety: None,
        }
    }

    fn add(&mut self, rank: usize, amount: usize) -> f64 {
        self.acc += amount;
        if self.total == 0 {
            return 0.0;
        }
        if self.ninety.is_none() && 10 * self.acc >= 9 * self.total {
            self.ninety = Some(rank);
        }
        self.acc as f64 / self.total as f64
    }
}

pub fn cumulative_curves(
    partition: &Partition,
    correct: &BTreeMap<InstanceId, bool>,
    stats: &ForgettingStats,
) -> Result<CumulativeCurves> {
    if partition.is_empty() {
        return Err(Error::Empty("partition has no clusters".into()));
    }
    let order = size_order(partition);
    let mut per_cluster = Vec::with_capacity(order.len());
    for &c in &order {
        let cl = &partition.clusters[c];
        let mut errors = 0;
        let mut forgetting = 0;
        for &id in &cl.instance_ids {
            errors += usize::from(!flag_of(correct, id)?);
            forgetting += forgetting_of(stats, id)?;
        }
        per_cluster.push((c, cl.len(), errors, forgetting));
    }
    let mut inst = Running::new(per_cluster.iter().map(|p| p.1).sum());
    let mut err = Running::new(per_cluster.iter().map(|p| p.2).sum());
    let mut forg = Running::new(per_cluster.iter().map(|p| p.3).sum());
    let rows = per_cluster
        .into_iter()
        .enumerate()
        .map(|(rank, (cluster, size, e, f))| CumulativeRow {
            rank,
            cluster,
            size,
            cum_instances: inst.add(rank, size),
            cum_errors: err.add(rank, e),
            cum_forgetting: forg.add(rank, f),
        })
        .collect();
    Ok(CumulativeCurves {
        rows,
        instances_ninety: inst.ninety.expect("non-empty partition reaches 1.0"),
        errors_ninety: err.ninety,
        forgetting_ninety: forg.ninety,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectnessHistogram {
    /// `(instance, size of its cluster, correctly classified)` in id order.
    pub rows: Vec<(InstanceId, usize, bool)>,
    pub correct_sizes: Vec<usize>,
    pub wrong_sizes: Vec<usize>,
}

pub fn correctness_histogram(
    partition: &Partition,
    correct: &BTreeMap<InstanceId, bool>,
) -> Result<CorrectnessHistogram> {
    let mut rows = Vec::with_capacity(partition.num_instances());
    for cl in &partition.clusters {
        for &id in &cl.instance_ids {
            rows.push((id, cl.len(), flag_of(correct, id)?));
        }
    }
    rows.sort_unstable();
    let (ok, bad): (Vec<&(InstanceId, usize, bool)>, Vec<_>) = rows.iter().partition(|r| r.2);
    Ok(CorrectnessHistogram {
        correct_sizes: ok.iter().map(|r| r.1).collect(),
        wrong_sizes: bad.iter().map(|r| r.1).collect(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub num_instances: usize,
    pub num_clusters: usize,
    pub cluster_sizes: SizeSummary,
    pub correct_cluster_sizes: Option<SizeSummary>,
    pub wrong_cluster_sizes: Option<SizeSummary>,
    pub errors: usize,
    pub forgetting_events: usize,
    pub instances_ninety_rank: usize,
    pub errors_ninety_rank: Option<usize>,
    pub forgetting_ninety_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub config: serde_json::Value,
    pub files: Vec<String>,
    pub summary: ReportSummary,
}

pub const REPORT_FILES: [&str; 4] = [
    "sizes.csv",
    "forgetting_bins.csv",
    "cumulative.csv",
    "correctness_hist.csv",
];

/// All four analyses for one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub sizes: SizeDistribution,
    pub bins: BinnedForgetting,
    pub curves: CumulativeCurves,
    pub histogram: CorrectnessHistogram,
    pub forgetting_total: usize,
}

impl Report {
    pub fn compute(
        partition: &Partition,
        correct: &BTreeMap<InstanceId, bool>,
        stats: &ForgettingStats,
    ) -> Result<Self> {
        let report = Self {
            sizes: size_distribution(partition)?,
            bins: forgetting_by_binned_size(partition, stats)?,
            curves: cumulative_curves(partition, correct, stats)?,
            histogram: correctness_histogram(partition, correct)?,
            forgetting_total: partition
                .clusters
                .iter()
                .flat_map(|c| c.instance_ids.iter())
                .map(|&id| forgetting_of(stats, id))
                .sum::<Result<usize>>()?,
        };
        report.check_conservation(partition.num_instances())?;
        Ok(report)
    }

    fn check_conservation(&self, n: usize) -> Result<()> {
        let sizes: usize = self.sizes.sizes.iter().sum();
        let binned: usize = self.bins.bins.iter().map(|b| b.count).sum();
        let hist = self.histogram.correct_sizes.len() + self.histogram.wrong_sizes.len();
        let curve: usize = self.curves.rows.iter().map(|r| r.size).sum();
        if [sizes, binned, hist, curve].iter().any(|&t| t != n) {
            return Err(Error::Invariant(format!(
                "instance totals {sizes}/{binned}/{hist}/{curve} differ from {n}"
            )));
        }
        let monotone = |f: fn(&CumulativeRow) -> f64| {
            self.curves.rows.windows(2).all(|w| f(&w[0]) <= f(&w[1]))
        };
        if !(monotone(|r| r.cum_instances) && monotone(|r| r.cum_errors) && monotone(|r| r.cum_forgetting))
        {
            return Err(Error::Invariant("cumulative curve decreases".into()));
        }
        Ok(())
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            num_instances: self.sizes.sizes.iter().sum(),
            num_clusters: self.sizes.sizes.len(),
            cluster_sizes: self.sizes.summary,
            correct_cluster_sizes: SizeSummary::from_sizes(&self.histogram.correct_sizes),
            wrong_cluster_sizes: SizeSummary::from_sizes(&self.histogram.wrong_sizes),
            errors: self.histogram.wrong_sizes.len(),
            forgetting_events: self.forgetting_total,
            instances_ninety_rank: self.curves.instances_ninety,
            errors_ninety_rank: self.curves.errors_ninety,
            forgetting_ninety_rank: self.curves.forgetting_ninety,
        }
    }

    pub fn sizes_csv(&self) -> String {
        let mut s = String::from("cluster_id,size\n");
        for (c, size) in self.sizes.sizes.iter().enumerate() {
            let _ = writeln!(s, "{c},{size}");
        }
        s
    }

    pub fn bins_csv(&self) -> String {
        let mut s = String::from("lo,hi,mean,count\n");
        for b in &self.bins.bins {
            let mean = b.mean.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{mean},{}", b.lo, b.hi, b.count);
        }
        s
    }

    pub fn cumulative_csv(&self) -> String {
        let mut s = String::from("rank,size,cum_instances,cum_errors,cum_forgetting\n");
        for r in &self.curves.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.rank, r.size, r.cum_instances, r.cum_errors, r.cum_forgetting
            );
        }
        s
    }

    pub fn correctness_csv(&self) -> String {
        let mut s = String::from("instance_id,cluster_size,correct\n");
        for (id, size, ok) in &self.histogram.rows {
            let _ = writeln!(s, "{id},{size},{ok}");
        }
        s
    }

    /// Write the four CSVs and `manifest.json` into `dest` (created if
    /// needed). Output bytes depend only on the inputs.
    pub fn emit(&self, dest: impl AsRef<Path>, run_id: &str, config: &serde_json::Value) -> Result<Manifest> {
        let dest = dest.as_ref();
        fs::create_dir_all(dest).map_err(|e| Error::io(dest, e))?;
        let contents = [
            self.sizes_csv(),
            self.bins_csv(),
            self.cumulative_csv(),
            self.correctness_csv(),
        ];
        for (name, body) in REPORT_FILES.iter().zip(&contents) {
            let path: PathBuf = dest.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        let manifest = Manifest {
            run_id: run_id.to_string(),
            config: config.clone(),
            files: REPORT_FILES.iter().map(|s| s.to_string()).collect(),
            summary: self.summary(),
        };
        let path = dest.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

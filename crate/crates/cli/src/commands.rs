use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use apdkit::apd::build_apd;
use apdkit::checkpoint::{fingerprint, Checkpoint};
use apdkit::clustering::{read_partition, split_with, write_partition, PartitionFile};
use apdkit::monitor::{compute_events, ForgettingStats, PredictionHistory};
use apdkit::nn::{train, Architecture, DenseReluNetwork};
use apdkit::patterns::{extract_trajectories, read_trace, write_trace, TraceHeader};
use apdkit::report::{Manifest, Report, SizeSummary};
use apdkit::{Error, InstanceId};
use serde::{Deserialize, Serialize};

use crate::config::{resolve_arch, RunConfig};
use crate::error::{CliError, CliResult};

/// File names inside one run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("checkpoint.json")
    }

    pub fn history(&self) -> PathBuf {
        self.root.join("history.csv")
    }

    pub fn stats(&self) -> PathBuf {
        self.root.join("stats.csv")
    }

    pub fn correctness(&self) -> PathBuf {
        self.root.join("correctness.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("train_summary.json")
    }

    pub fn trace(&self) -> PathBuf {
        self.root.join("trace.jsonl")
    }

    pub fn apd_json(&self) -> PathBuf {
        self.root.join("apd.json")
    }

    pub fn apd_txt(&self) -> PathBuf {
        self.root.join("apd.txt")
    }

    pub fn partition(&self) -> PathBuf {
        self.root.join("partition.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

/// Written by `train`; carries the fingerprint that ties the CSV outputs
/// of training to the downstream files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub fingerprint: String,
    pub arch: String,
    pub architecture: Architecture,
    pub num_instances: usize,
    pub accuracy: f64,
    pub errors: usize,
    pub forgetting_events: usize,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub fingerprint: String,
    pub nodes: usize,
    pub edges: usize,
    pub clusters: usize,
}

/// The config as echoed into output files: everything that affects results,
/// nothing that depends on where or how fast the run happened.
fn echo(cfg: &RunConfig) -> RunConfig {
    RunConfig {
        out: None,
        threads: None,
        ..cfg.clone()
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn format_error(path: &Path, reason: impl Into<String>) -> CliError {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
    .into()
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| {
        Error::Io {
            path: dir.to_path_buf(),
            source,
        }
        .into()
    })
}

pub fn read_summary(path: &Path) -> CliResult<TrainSummary> {
    serde_json::from_str(&read_text(path)?).map_err(|e| format_error(path, e.to_string()))
}

fn check_same(expected: &str, found: &str) -> CliResult<()> {
    if expected != found {
        return Err(Error::Stale {
            expected: expected.to_string(),
            found: found.to_string(),
        }
        .into());
    }
    Ok(())
}

/// If a training summary sits in the run directory, `found` must match it.
fn check_against_summary(paths: &RunPaths, found: &str) -> CliResult<()> {
    if paths.summary().exists() {
        check_same(&read_summary(&paths.summary())?.fingerprint, found)?;
    }
    Ok(())
}

/// Train with the monitor attached; write checkpoint, prediction history,
/// forgetting statistics, per-instance correctness and a summary.
pub fn cmd_train(cfg: &RunConfig) -> CliResult<TrainSummary> {
    cfg.validate()?;
    let paths = RunPaths::new(cfg.out_dir());
    let data = cfg.dataset.load()?;
    let widths = resolve_arch(&cfg.arch)?;
    let arch = Architecture::new(data.dim(), widths, data.num_classes())?;
    let net = DenseReluNetwork::init(arch, cfg.init_seed)?;

    let mut history = PredictionHistory::for_dataset(&data);
    let trained = train(net, &data, &cfg.train, |epoch, net| {
        history.record_epoch(net, &data, epoch)
    })?;
    let stats = compute_events(&history, data.labels())?;
    let eval = trained.evaluate(&data)?;

    ensure_dir(&paths.root)?;
    Checkpoint::new(&trained, cfg.init_seed, Some(cfg.train.clone())).save(paths.checkpoint())?;
    history.write_csv(paths.history(), data.labels())?;
    stats.write_csv(paths.stats())?;
    let mut csv = String::from("id,true_label,predicted,correct\n");
    for i in 0..data.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            eval.ids[i],
            data.labels()[i],
            eval.predicted[i],
            eval.correct[i]
        ));
    }
    write_text(&paths.correctness(), &csv)?;

    let summary = TrainSummary {
        fingerprint: fingerprint(&trained),
        arch: cfg.arch.clone(),
        architecture: trained.architecture.clone(),
        num_instances: data.len(),
        accuracy: eval.accuracy,
        errors: eval.correct.iter().filter(|c| !**c).count(),
        forgetting_events: stats.total_forgetting(),
        config: echo(cfg),
    };
    write_json(&paths.summary(), &summary)?;
    Ok(summary)
}

/// Run the configured dataset through the checkpointed network and write
/// the trajectory trace.
pub fn cmd_extract(cfg: &RunConfig) -> CliResult<TraceHeader> {
    cfg.validate()?;
    let paths = RunPaths::new(cfg.out_dir());
    let net = Checkpoint::load(paths.checkpoint())?.network()?;
    let fp = fingerprint(&net);
    check_against_summary(&paths, &fp)?;
    let data = cfg.dataset.load()?;
    let set = extract_trajectories(&net, &data)?;
    let header = TraceHeader {
        fingerprint: fp,
        architecture: net.architecture.clone(),
        dataset: serde_json::to_value(&cfg.dataset).map_err(Error::from)?,
    };
    write_trace(paths.trace(), &header, &set)?;
    Ok(header)
}

/// Build the APD from the trace, split it, and write the APD exports and
/// the partition.
pub fn cmd_cluster(cfg: &RunConfig) -> CliResult<ClusterOutcome> {
    cfg.validate()?;
    let paths = RunPaths::new(cfg.out_dir());
    let (header, set) = read_trace(paths.trace())?;
    check_against_summary(&paths, &header.fingerprint)?;
    let apd = build_apd(&set)?;
    apd.check_invariants(&set)?;
    let partition = split_with(&apd, &set, cfg.label_mode)?;

    write_json(&paths.apd_json(), &apd.to_export())?;
    write_text(&paths.apd_txt(), &apd.to_edge_list())?;
    let file = PartitionFile::new(&partition, &apd, cfg.label_mode);
    write_partition(paths.partition(), &file)?;
    Ok(ClusterOutcome {
        fingerprint: header.fingerprint,
        nodes: apd.nodes().len(),
        edges: apd.edges().len(),
        clusters: partition.len(),
    })
}

/// `id,true_label,predicted,correct` as written by `train`.
pub fn read_correctness(path: &Path) -> CliResult<BTreeMap<InstanceId, bool>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("id,true_label,predicted,correct") {
        return Err(format_error(path, "unexpected header"));
    }
    let mut flags = BTreeMap::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let bad = || format_error(path, format!("line {}: malformed row", n + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let id: InstanceId = f[0].parse().map_err(|_| bad())?;
        let truth: u32 = f[1].parse().map_err(|_| bad())?;
        let pred: u32 = f[2].parse().map_err(|_| bad())?;
        let correct: bool = f[3].parse().map_err(|_| bad())?;
        if correct != (truth == pred) || flags.insert(id, correct).is_some() {
            return Err(bad());
        }
    }
    Ok(flags)
}

/// Join the partition with the training statistics and emit the report
/// bundle.
pub fn cmd_report(cfg: &RunConfig) -> CliResult<Manifest> {
    cfg.validate()?;
    let paths = RunPaths::new(cfg.out_dir());
    let summary = read_summary(&paths.summary())?;
    let file = read_partition(paths.partition())?;
    check_same(&summary.fingerprint, &file.fingerprint)?;
    let partition = file.to_partition();
    let stats = ForgettingStats::read_csv(paths.stats())?;
    let correct = read_correctness(&paths.correctness())?;

    let ids: BTreeSet<InstanceId> = partition
        .clusters
        .iter()
        .flat_map(|c| c.instance_ids.iter().copied())
        .collect();
    partition.check_covers(&ids)?;
    let stat_ids: BTreeSet<InstanceId> = stats.per_instance.keys().copied().collect();
    let flag_ids: BTreeSet<InstanceId> = correct.keys().copied().collect();
    if stat_ids != ids || flag_ids != ids {
        return Err(Error::Pairing(format!(
            "partition has {} instances, statistics {}, correctness flags {}",
            ids.len(),
            stat_ids.len(),
            flag_ids.len()
        ))
        .into());
    }

    let report = Report::compute(&partition, &correct, &stats)?;
    let config = serde_json::json!({
        "run": echo(cfg),
        "hidden_widths": summary.architecture.hidden_widths,
        "fingerprint": summary.fingerprint,
    });
    let run_id = summary.fingerprint.chars().take(16).collect::<String>();
    let manifest = report.emit(paths.report_dir(), &run_id, &config)?;
    check_sizes_csv(&paths.report_dir().join("sizes.csv"), &manifest)?;
    Ok(manifest)
}

/// The size summary recomputed from the emitted CSV must equal the manifest's.
fn check_sizes_csv(path: &Path, manifest: &Manifest) -> CliResult<()> {
    let text = read_text(path)?;
    let sizes = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).and_then(|s| s.parse::<usize>().ok()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| format_error(path, "malformed size row"))?;
    if SizeSummary::from_sizes(&sizes) != Some(manifest.summary.cluster_sizes) {
        return Err(Error::Invariant("sizes.csv disagrees with the manifest summary".into()).into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub train: TrainSummary,
    pub cluster: ClusterOutcome,
    pub manifest: Manifest,
}

pub fn cmd_pipeline(cfg: &RunConfig) -> CliResult<PipelineOutcome> {
    let train = cmd_train(cfg)?;
    cmd_extract(cfg)?;
    let cluster = cmd_cluster(cfg)?;
    let manifest = cmd_report(cfg)?;
    Ok(PipelineOutcome {
        train,
        cluster,
        manifest,
    })
}

/// Run `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

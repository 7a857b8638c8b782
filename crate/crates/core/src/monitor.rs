//! Per-epoch prediction tracking and learning / forgetting events.
//!
//! An instance with true label `k` has a learning event at epoch `e` when
//! `pred_{e-1} != k` and `pred_e == k`, and a forgetting event when
//! `pred_{e-1} == k` and `pred_e != k`. The first epoch has no predecessor
//! and produces no events. Instances with no forgetting event are
//! unforgettable, including those never predicted correctly; the latter are
//! flagged separately as `never_learned`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::DenseReluNetwork;
use crate::InstanceId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionHistory {
    ids: Vec<InstanceId>,
    // labels[i][e]: prediction for ids[i] after epoch e
    labels: Vec<Vec<u32>>,
    epochs: usize,
}

impl PredictionHistory {
    pub fn new(ids: Vec<InstanceId>) -> Self {
        let labels = vec![Vec::new(); ids.len()];
        Self {
            ids,
            labels,
            epochs: 0,
        }
    }

    pub fn for_dataset(data: &Dataset) -> Self {
        Self::new(data.ids().to_vec())
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn ids(&self) -> &[InstanceId] {
        &self.ids
    }

    /// Predictions of the instance at position `i`, one per epoch.
    pub fn sequence(&self, i: usize) -> &[u32] {
        &self.labels[i]
    }

    /// Append one epoch of predictions, aligned with [`Self::ids`].
    pub fn push_epoch(&mut self, epoch_index: usize, predictions: &[u32]) -> Result<()> {
        if epoch_index != self.epochs {
            return Err(Error::EpochOrder {
                expected: self.epochs,
                got: epoch_index,
            });
        }
        if predictions.len() != self.ids.len() {
            return Err(Error::Shape(format!(
                "{} predictions for {} instances",
                predictions.len(),
                self.ids.len()
            )));
        }
        for (seq, &p) in self.labels.iter_mut().zip(predictions) {
            seq.push(p);
        }
        self.epochs += 1;
        Ok(())
    }

    /// Predict every instance of `data` with `net` and append the result.
    pub fn record_epoch(
        &mut self,
        net: &DenseReluNetwork,
        data: &Dataset,
        epoch_index: usize,
    ) -> Result<()> {
        if data.ids() != self.ids.as_slice() {
            return Err(Error::Shape(
                "dataset ids differ from the tracked instances".into(),
            ));
        }
        if epoch_index != self.epochs {
            return Err(Error::EpochOrder {
                expected: self.epochs,
                got: epoch_index,
            });
        }
        let predictions: Vec<u32> = net
            .predict_all(data)?
            .into_iter()
            .map(|p| p as u32)
            .collect();
        self.push_epoch(epoch_index, &predictions)
    }

    /// CSV: `id,true_label,epoch_1,...,epoch_E`.
    pub fn write_csv(&self, path: impl AsRef<Path>, true_labels: &[u32]) -> Result<()> {
        let path = path.as_ref();
        if true_labels.len() != self.ids.len() {
            return Err(Error::Shape("true labels not aligned with history".into()));
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut header = String::from("id,true_label");
        for e in 1..=self.epochs {
            header.push_str(&format!(",epoch_{e}"));
        }
        let io = |e| Error::io(path, e);
        writeln!(out, "{header}").map_err(io)?;
        for ((id, y), seq) in self.ids.iter().zip(true_labels).zip(&self.labels) {
            let mut line = format!("{id},{y}");
            for p in seq {
                line.push(',');
                line.push_str(&p.to_string());
            }
            writeln!(out, "{line}").map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceEvents {
    pub learning_events: usize,
    pub forgetting_events: usize,
    pub forgettable: bool,
    pub never_learned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ForgettingStats {
    pub per_instance: BTreeMap<InstanceId, InstanceEvents>,
}

impl ForgettingStats {
    pub fn get(&self, id: InstanceId) -> Option<&InstanceEvents> {
        self.per_instance.get(&id)
    }

    pub fn total_forgetting(&self) -> usize {
        self.per_instance.values().map(|e| e.forgetting_events).sum()
    }

    /// CSV: `id,learning_events,forgetting_events,forgettable,never_learned`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "id,learning_events,forgetting_events,forgettable,never_learned")
            .map_err(io)?;
        for (id, e) in &self.per_instance {
            writeln!(
                out,
                "{id},{},{},{},{}",
                e.learning_events, e.forgetting_events, e.forgettable, e.never_learned
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != "id,learning_events,forgetting_events,forgettable,never_learned" {
            return Err(Error::format(path, format!("unexpected header {header:?}")));
        }
        let mut per_instance = BTreeMap::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = |what: &str| Error::format(path, format!("line {}: bad {what}", n + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad("field count"));
            }
            let id: InstanceId = f[0].parse().map_err(|_| bad("id"))?;
            let events = InstanceEvents {
                learning_events: f[1].parse().map_err(|_| bad("learning_events"))?,
                forgetting_events: f[2].parse().map_err(|_| bad("forgetting_events"))?,
                forgettable: f[3].parse().map_err(|_| bad("forgettable"))?,
                never_learned: f[4].parse().map_err(|_| bad("never_learned"))?,
            };
            if events.forgettable != (events.forgetting_events > 0) {
                return Err(bad("forgettable flag"));
            }
            if per_instance.insert(id, events).is_some() {
                return Err(bad("duplicate id"));
            }
        }
        Ok(Self { per_instance })
    }
}

/// Learning and forgetting event counts per instance. `true_labels` is
/// aligned with `history.ids()`.
pub fn compute_events(history: &PredictionHistory, true_labels: &[u32]) -> Result<ForgettingStats> {
    if history.epochs() == 0 {
        return Err(Error::Empty("prediction history has no epochs".into()));
    }
    if true_labels.len() != history.ids().len() {
        return Err(Error::Shape(format!(
            "{} true labels for {} instances",
            true_labels.len(),
            history.ids().len()
        )));
    }
    let per_instance = history
        .ids()
        .iter()
        .zip(true_labels)
        .enumerate()
        .map(|(i, (&id, &k))| {
            let seq = history.sequence(i);
            let mut learning_events = 0;
            let mut forgetting_events = 0;
            for w in seq.windows(2) {
                match (w[0] == k, w[1] == k) {
                    (false, true) => learning_events += 1,
                    (true, false) => forgetting_events += 1,
                    _ => {}
                }
            }
            let events = InstanceEvents {
                learning_events,
                forgetting_events,
                forgettable: forgetting_events > 0,
                never_learned: seq.iter().all(|&p| p != k),
            };
            (id, events)
        })
        .collect();
    Ok(ForgettingStats { per_instance })
}

pub fn forgetting_by_instance(stats: &ForgettingStats) -> Result<BTreeMap<InstanceId, usize>> {
    if stats.per_instance.is_empty() {
        return Err(Error::Empty("no forgetting statistics".into()));
    }
    Ok(stats
        .per_instance
        .iter()
        .map(|(&id, e)| (id, e.forgetting_events))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(seq: &[u32]) -> PredictionHistory {
        let mut h = PredictionHistory::new(vec![0]);
        for (e, &p) in seq.iter().enumerate() {
            h.push_epoch(e, &[p]).unwrap();
        }
        h
    }

    #[test]
    fn out_of_order_epoch() {
        let mut h = PredictionHistory::new(vec![0, 1]);
        assert!(matches!(
            h.push_epoch(1, &[0, 0]),
            Err(Error::EpochOrder { expected: 0, got: 1 })
        ));
        h.push_epoch(0, &[0, 0]).unwrap();
        assert!(h.push_epoch(0, &[0, 0]).is_err());
    }

    #[test]
    fn never_learned_is_flagged() {
        let s = compute_events(&history(&[1, 2, 1]), &[0]).unwrap();
        let e = s.get(0).unwrap();
        assert!(!e.forgettable && e.never_learned);
        let s = compute_events(&history(&[1, 0]), &[0]).unwrap();
        assert!(!s.get(0).unwrap().never_learned);
    }

    #[test]
    fn misaligned_labels_rejected() {
        assert!(matches!(
            compute_events(&history(&[1]), &[0, 1]),
            Err(Error::Shape(_))
        ));
        assert!(compute_events(&PredictionHistory::new(vec![0]), &[0]).is_err());
    }

    #[test]
    fn empty_stats_rejected() {
        assert!(forgetting_by_instance(&ForgettingStats::default()).is_err());
    }

    #[test]
    fn stats_csv_roundtrip() {
        let mut h = PredictionHistory::new(vec![3, 8, 9]);
        for (e, p) in [[0, 1, 1], [1, 1, 0], [0, 0, 1], [1, 1, 1]].iter().enumerate() {
            h.push_epoch(e, p).unwrap();
        }
        let stats = compute_events(&h, &[1, 1, 0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        stats.write_csv(&path).unwrap();
        assert_eq!(ForgettingStats::read_csv(&path).unwrap(), stats);

        let hpath = dir.path().join("history.csv");
        h.write_csv(&hpath, &[1, 1, 0]).unwrap();
        let text = std::fs::read_to_string(&hpath).unwrap();
        assert_eq!(
            text,
            "id,true_label,epoch_1,epoch_2,epoch_3,epoch_4\n3,1,0,1,0,1\n8,1,1,1,0,1\n9,0,1,0,1,1\n"
        );
    }
}

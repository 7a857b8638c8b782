//! Python bindings: networks, datasets, trajectory extraction, the pattern
//! DAG, the splitting algorithm and forgetting events.

use apdkit_core::apd::{build_apd, Apd as CoreApd, Stability};
use apdkit_core::checkpoint::{fingerprint, Checkpoint};
use apdkit_core::clustering::{self, LabelMode};
use apdkit_core::dataset::{self, SyntheticSpec};
use apdkit_core::fixtures;
use apdkit_core::monitor::{compute_events, PredictionHistory};
use apdkit_core::nn::{self, Architecture, DenseReluNetwork, TrainConfig};
use apdkit_core::patterns::{self, activation_region, extract_pattern, ActivationPattern, Trajectory, TrajectorySet};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: apdkit_core::Error) -> PyErr {
    match e {
        apdkit_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn bits_of(p: &ActivationPattern) -> Vec<u32> {
    p.bits().map(u32::from).collect()
}

#[pyclass(name = "Dataset", module = "apdkit", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: dataset::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Build from rows of features and integer labels; ids are row positions.
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<u32>, num_classes: usize) -> PyResult<Self> {
        let dim = features.first().map_or(0, Vec::len);
        if features.iter().any(|r| r.len() != dim) {
            return Err(PyValueError::new_err("all feature rows must have the same length"));
        }
        let ids = (0..features.len() as u32).collect();
        let flat = features.into_iter().flatten().collect();
        dataset::Dataset::new(dim, num_classes, ids, flat, labels)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (num_classes, points_per_class, dimension, separation=4.0, noise=0.5, seed=0))]
    fn synthetic(
        num_classes: usize,
        points_per_class: usize,
        dimension: usize,
        separation: f64,
        noise: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let spec = SyntheticSpec {
            num_classes,
            points_per_class,
            dimension,
            class_center_separation: separation,
            noise_scale: noise,
            seed,
        };
        dataset::generate_synthetic(&spec)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Load an IDX image / label pair, gzip or raw.
    #[staticmethod]
    #[pyo3(signature = (images, labels, normalize=true))]
    fn from_idx(images: &str, labels: &str, normalize: bool) -> PyResult<Self> {
        let imgs = dataset::load_idx_images(images).map_err(to_py)?;
        let lbls = dataset::load_idx_labels(labels).map_err(to_py)?;
        let raw = dataset::pair_idx(&imgs, &lbls).map_err(to_py)?;
        Ok(Self {
            inner: if normalize { raw.normalize() } else { raw },
        })
    }

    fn subset(&self, count: usize, seed: u64) -> PyResult<Self> {
        self.inner
            .subset_random(count, seed)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn ids(&self) -> Vec<u32> {
        self.inner.ids().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.inner.labels().to_vec()
    }

    fn features(&self, position: usize) -> PyResult<Vec<f64>> {
        if position >= self.inner.len() {
            return Err(PyValueError::new_err(format!("position {position} out of range")));
        }
        Ok(self.inner.features(position).to_vec())
    }
}

#[pyclass(name = "Network", module = "apdkit", skip_from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: DenseReluNetwork,
}

#[pymethods]
impl PyNetwork {
    /// Randomly initialized network.
    #[new]
    #[pyo3(signature = (input_dim, hidden_widths, output_dim, seed=0))]
    fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize, seed: u64) -> PyResult<Self> {
        let arch = Architecture::new(input_dim, hidden_widths, output_dim).map_err(to_py)?;
        DenseReluNetwork::init(arch, seed)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = Checkpoint::load(path).and_then(|c| c.network()).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        Checkpoint::new(&self.inner, 0, None).save(path).map_err(to_py)
    }

    #[getter]
    fn hidden_widths(&self) -> Vec<usize> {
        self.inner.architecture.hidden_widths.clone()
    }

    fn fingerprint(&self) -> String {
        fingerprint(&self.inner)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<usize> {
        self.inner.predict(&x).map_err(to_py)
    }

    fn logits(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.forward_trace(&x).map_err(to_py)?.logits)
    }

    /// Activation pattern of every hidden layer as lists of 0/1.
    fn patterns(&self, x: Vec<f64>) -> PyResult<Vec<Vec<u32>>> {
        let trace = self.inner.forward_trace(&x).map_err(to_py)?;
        (1..=self.inner.depth())
            .map(|l| extract_pattern(&trace, l).map(|p| bits_of(&p)).map_err(to_py))
            .collect()
    }

    /// Accuracy and per-instance correctness flags.
    fn evaluate(&self, data: &PyDataset) -> PyResult<(f64, Vec<bool>)> {
        let eval = self.inner.evaluate(&data.inner).map_err(to_py)?;
        Ok((eval.accuracy, eval.correct))
    }

    /// Train in place; returns the epoch-end predictions, one list per epoch.
    #[pyo3(signature = (data, learning_rate, epochs, batch_size=32, seed=0))]
    fn train(
        &mut self,
        py: Python<'_>,
        data: &PyDataset,
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<Vec<Vec<u32>>> {
        let config = TrainConfig {
            learning_rate,
            epochs,
            batch_size,
            seed,
            shuffle_each_epoch: true,
        };
        let net = self.inner.clone();
        let data = &data.inner;
        let (trained, history) = py
            .detach(|| {
                let mut history = PredictionHistory::for_dataset(data);
                nn::train(net, data, &config, |e, n| history.record_epoch(n, data, e))
                    .map(|t| (t, history))
            })
            .map_err(to_py)?;
        self.inner = trained;
        Ok((0..history.epochs())
            .map(|e| (0..history.ids().len()).map(|i| history.sequence(i)[e]).collect())
            .collect())
    }
}

#[pyclass(name = "Trajectories", module = "apdkit", skip_from_py_object)]
#[derive(Clone)]
struct PyTrajectories {
    inner: TrajectorySet,
}

#[pymethods]
impl PyTrajectories {
    /// Build from `(instance_id, [layer bits, ...], predicted_label)` tuples.
    #[new]
    #[pyo3(signature = (records, fingerprint="python"))]
    fn new(records: Vec<(u32, Vec<Vec<u8>>, u32)>, fingerprint: &str) -> PyResult<Self> {
        let widths = records
            .first()
            .map(|r| r.1.iter().map(Vec::len).collect())
            .unwrap_or_default();
        let trajectories = records
            .into_iter()
            .map(|(id, layers, label)| Trajectory {
                instance_id: id,
                patterns: layers
                    .iter()
                    .enumerate()
                    .map(|(l, bits)| ActivationPattern::from_slice(l + 1, bits))
                    .collect(),
                predicted_label: label,
                true_label: None,
            })
            .collect();
        TrajectorySet::new(fingerprint, widths, trajectories)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.fingerprint().to_string()
    }

    fn distinct_pattern_counts(&self) -> Vec<usize> {
        self.inner.distinct_pattern_counts()
    }

    fn patterns(&self, instance_id: u32) -> PyResult<Vec<Vec<u32>>> {
        let t = self
            .inner
            .get(instance_id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown instance {instance_id}")))?;
        Ok(t.patterns.iter().map(bits_of).collect())
    }

    fn predicted_label(&self, instance_id: u32) -> PyResult<u32> {
        self.inner
            .get(instance_id)
            .map(|t| t.predicted_label)
            .ok_or_else(|| PyValueError::new_err(format!("unknown instance {instance_id}")))
    }

    /// Ids whose pattern at `layer` (1-based) equals `bits`.
    fn region(&self, layer: usize, bits: Vec<u8>) -> Vec<u32> {
        let p = ActivationPattern::from_slice(layer, &bits);
        activation_region(&p, &self.inner, &self.inner.ids())
            .into_iter()
            .collect()
    }

    fn write(&self, path: &str, architecture: (usize, Vec<usize>, usize)) -> PyResult<()> {
        let header = patterns::TraceHeader {
            fingerprint: self.inner.fingerprint().to_string(),
            architecture: Architecture::new(architecture.0, architecture.1, architecture.2)
                .map_err(to_py)?,
            dataset: serde_json::Value::Null,
        };
        patterns::write_trace(path, &header, &self.inner).map_err(to_py)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let (_, inner) = patterns::read_trace(path).map_err(to_py)?;
        Ok(Self { inner })
    }
}

#[pyfunction]
fn extract(network: &PyNetwork, data: &PyDataset) -> PyResult<PyTrajectories> {
    patterns::extract_trajectories(&network.inner, &data.inner)
        .map(|inner| PyTrajectories { inner })
        .map_err(to_py)
}

#[pyclass(name = "Apd", module = "apdkit")]
struct PyApd {
    inner: CoreApd,
    set: TrajectorySet,
}

#[pymethods]
impl PyApd {
    #[new]
    fn new(trajectories: &PyTrajectories) -> PyResult<Self> {
        let inner = build_apd(&trajectories.inner).map_err(to_py)?;
        inner.check_invariants(&trajectories.inner).map_err(to_py)?;
        Ok(Self {
            inner,
            set: trajectories.inner.clone(),
        })
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.nodes().len()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.edges().len()
    }

    /// `(layer, bits)` of every node, indexed by node id.
    fn nodes(&self) -> Vec<(usize, Vec<u32>)> {
        self.inner
            .nodes()
            .iter()
            .map(|n| (n.pattern.layer(), bits_of(&n.pattern)))
            .collect()
    }

    /// `(from, to, supporting ids)` for every edge.
    fn edges(&self) -> Vec<(usize, usize, Vec<u32>)> {
        self.inner
            .edges()
            .iter()
            .map(|(&(a, b), ids)| (a, b, ids.clone()))
            .collect()
    }

    fn predecessors(&self, node: usize) -> PyResult<Vec<usize>> {
        Ok(self.inner.predecessors(node).map_err(to_py)?.iter().copied().collect())
    }

    fn node_of(&self, layer: usize, bits: Vec<u8>) -> Option<usize> {
        self.inner.node_of(&ActivationPattern::from_slice(layer, &bits))
    }

    /// `True` for stable nodes, indexed by node id.
    fn stability(&self) -> PyResult<Vec<bool>> {
        Ok(self
            .inner
            .classify_stability(&self.set)
            .map_err(to_py)?
            .into_iter()
            .map(|s| s == Stability::Stable)
            .collect())
    }

    fn instance_path(&self, instance_id: u32) -> PyResult<Vec<usize>> {
        self.inner.instance_path(&self.set, instance_id).map_err(to_py)
    }

    fn edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    /// Final clusters in order of finalization, each a sorted id list.
    #[pyo3(signature = (label_mode="predicted"))]
    fn split(&self, label_mode: &str) -> PyResult<Vec<Vec<u32>>> {
        let mode: LabelMode = label_mode.parse().map_err(to_py)?;
        let p = clustering::split_with(&self.inner, &self.set, mode).map_err(to_py)?;
        Ok(p.clusters.into_iter().map(|c| c.instance_ids).collect())
    }
}

#[pyfunction]
fn entropy(labels: Vec<u32>) -> PyResult<f64> {
    clustering::entropy(&labels).map_err(to_py)
}

#[pyfunction]
fn information_gain(parent: Vec<u32>, children: Vec<Vec<u32>>) -> PyResult<f64> {
    clustering::information_gain(&parent, &children).map_err(to_py)
}

/// Per-instance `(learning_events, forgetting_events, forgettable,
/// never_learned)` from epoch-major predictions and true labels.
#[pyfunction]
fn forgetting_events(predictions: Vec<Vec<u32>>, true_labels: Vec<u32>) -> PyResult<Vec<(usize, usize, bool, bool)>> {
    let mut history = PredictionHistory::new((0..true_labels.len() as u32).collect());
    for (e, preds) in predictions.iter().enumerate() {
        history.push_epoch(e, preds).map_err(to_py)?;
    }
    let stats = compute_events(&history, &true_labels).map_err(to_py)?;
    Ok(stats
        .per_instance
        .values()
        .map(|e| (e.learning_events, e.forgetting_events, e.forgettable, e.never_learned))
        .collect())
}

/// The hand-built network and input whose patterns are
/// `[1,0,1,1,0]`, `[0,1,1,0,0]`, `[1,1,1,1,0]`.
#[pyfunction]
fn five_unit_example() -> (PyNetwork, Vec<f64>) {
    let (inner, x) = fixtures::five_unit_network();
    (PyNetwork { inner }, x)
}

/// The seven-instance, three-layer trajectory example.
#[pyfunction]
fn seven_instance_example() -> PyTrajectories {
    PyTrajectories {
        inner: fixtures::seven_instance_trajectories(),
    }
}

#[pymodule]
fn apdkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyTrajectories>()?;
    m.add_class::<PyApd>()?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(information_gain, m)?)?;
    m.add_function(wrap_pyfunction!(forgetting_events, m)?)?;
    m.add_function(wrap_pyfunction!(five_unit_example, m)?)?;
    m.add_function(wrap_pyfunction!(seven_instance_example, m)?)?;
    Ok(())
}

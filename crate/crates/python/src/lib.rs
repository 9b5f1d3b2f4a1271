//! Python bindings.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use gemsec_core::eval::{self, ClusterAssignment};
use gemsec_core::graph::{self as core_graph, EdgeListFormat};
use gemsec_core::model::{self, Matrix};
use gemsec_core::{pipeline, Error};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        Error::MissingEdgeWeight(..) | Error::Json(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Undirected simple graph over nodes `0..node_count`.
#[pyclass(module = "gemsec", frozen)]
struct Graph {
    inner: core_graph::Graph,
    original_ids: Vec<i64>,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(node_count: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let (inner, _) = core_graph::Graph::from_edges(node_count, &edges).map_err(to_py)?;
        Ok(Self {
            inner,
            original_ids: (0..node_count as i64).collect(),
        })
    }

    /// Reads an edge list; `format` is csv, tsv, whitespace or auto.
    #[staticmethod]
    #[pyo3(signature = (path, format = "auto"))]
    fn load(path: &str, format: &str) -> PyResult<Self> {
        let format: EdgeListFormat = format.parse().map_err(to_py)?;
        let loaded = core_graph::load_edge_list(path, format).map_err(to_py)?;
        Ok(Self {
            inner: loaded.graph,
            original_ids: loaded.original_ids,
        })
    }

    #[staticmethod]
    fn erdos_renyi(node_count: usize, avg_degree: f64, seed: u64) -> PyResult<Self> {
        let inner = core_graph::erdos_renyi(node_count, avg_degree, seed).map_err(to_py)?;
        Ok(Self {
            inner,
            original_ids: (0..node_count as i64).collect(),
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// Label from the input file for each internal node id.
    #[getter]
    fn original_ids(&self) -> Vec<i64> {
        self.original_ids.clone()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        self.inner.check_node(v).map_err(to_py)?;
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Training hyperparameters. Keyword names match the CLI flags with
/// underscores, e.g. `TrainConfig(mode="deepwalk", walk_length=40)`.
#[pyclass(module = "gemsec")]
struct TrainConfig {
    inner: model::TrainConfig,
}

#[pymethods]
impl TrainConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut cfg = Self {
            inner: model::TrainConfig::default(),
        };
        if let Some(kwargs) = kwargs {
            for (k, v) in kwargs.iter() {
                cfg.set(&k.extract::<String>()?, &v)?;
            }
        }
        cfg.inner.validate().map_err(to_py)?;
        Ok(cfg)
    }

    /// Sets one hyperparameter by name.
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let text = value.str()?.to_string();
        self.inner.set(key, &text).map_err(to_py)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("TrainConfig({:?})", self.inner)
    }
}

/// Trained embedding with its clustering and score.
#[pyclass(module = "gemsec", frozen)]
struct EmbedResult {
    inner: pipeline::EmbedResult,
}

#[pymethods]
impl EmbedResult {
    #[getter]
    fn embeddings(&self) -> Vec<Vec<f64>> {
        self.inner.train.state.embeddings.to_rows()
    }

    #[getter]
    fn centers(&self) -> Vec<Vec<f64>> {
        self.inner.centers.to_rows()
    }

    #[getter]
    fn assignment(&self) -> Vec<usize> {
        self.inner.assignment.assignment.clone()
    }

    #[getter]
    fn modularity(&self) -> f64 {
        self.inner.modularity
    }

    /// `"nearest-center"` or `"k-means"`.
    #[getter]
    fn method<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.method)
    }

    /// Per-epoch records: epoch, loss, gamma, alpha, seconds.
    #[getter]
    fn log<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.train.log)
    }
}

/// Trains, clusters (learned centers, or k-means in DeepWalk mode) and
/// scores the result. Releases the interpreter lock while training.
#[pyfunction]
#[pyo3(signature = (graph, config = None, workers = 1, kmeans_restarts = 1))]
fn embed(
    py: Python<'_>,
    graph: PyRef<'_, Graph>,
    config: Option<PyRef<'_, TrainConfig>>,
    workers: usize,
    kmeans_restarts: usize,
) -> PyResult<EmbedResult> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    let g = &graph.inner;
    let inner = py
        .detach(|| pipeline::embed(g, &cfg, workers.max(1), kmeans_restarts))
        .map_err(to_py)?;
    Ok(EmbedResult { inner })
}

/// Newman modularity of a labelling given as one cluster id per node.
#[pyfunction]
fn modularity(graph: PyRef<'_, Graph>, assignment: Vec<usize>) -> PyResult<f64> {
    let k = assignment.iter().max().map_or(1, |m| m + 1);
    let a = ClusterAssignment::new(assignment, k).map_err(to_py)?;
    eval::modularity(&graph.inner, &a).map_err(to_py)
}

/// k-means++ then Lloyd; returns `(assignment, centers, wcss)`.
#[pyfunction]
#[pyo3(signature = (points, k, seed = 0, restarts = 1, max_iter = 300))]
fn kmeans(
    points: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
) -> PyResult<(Vec<usize>, Vec<Vec<f64>>, f64)> {
    let m = matrix(points)?;
    let r = eval::kmeans_restarts(&m, k, max_iter, seed, restarts).map_err(to_py)?;
    Ok((r.assignment.assignment, r.centers.to_rows(), r.wcss))
}

/// Scores an embedding (rows in internal node order) the way the
/// `evaluate` command does and returns the report as a dict.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (graph, embeddings, centers = None, clusters = 20, seed = 42, restarts = 1, repeats = 1))]
fn evaluate<'py>(
    py: Python<'py>,
    graph: PyRef<'_, Graph>,
    embeddings: Vec<Vec<f64>>,
    centers: Option<Vec<Vec<f64>>>,
    clusters: usize,
    seed: u64,
    restarts: usize,
    repeats: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let f = matrix(embeddings)?;
    let mu = centers.map(matrix).transpose()?;
    let report = pipeline::evaluate(&graph.inner, &f, mu.as_ref(), clusters, seed, restarts, repeats).map_err(to_py)?;
    json_to_py(py, &report)
}

/// One walk from every node, as sampled in training epoch `epoch`.
#[pyfunction]
#[pyo3(signature = (graph, config = None, epoch = 0))]
fn walks<'py>(
    py: Python<'py>,
    graph: PyRef<'_, Graph>,
    config: Option<PyRef<'_, TrainConfig>>,
    epoch: u64,
) -> PyResult<Bound<'py, PyList>> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    let mut out = Vec::with_capacity(graph.inner.node_count());
    for v in 0..graph.inner.node_count() {
        let w = gemsec_core::walk::sample_walk(&graph.inner, &cfg.walk, cfg.seed, epoch, v).map_err(to_py)?;
        out.push(w.nodes().to_vec());
    }
    PyList::new(py, out)
}

#[pymodule]
fn gemsec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<TrainConfig>()?;
    m.add_class::<EmbedResult>()?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(modularity, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(walks, m)?)?;
    Ok(())
}

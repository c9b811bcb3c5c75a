//! Python bindings for the torgnn core: torsion computations, weight
//! tables, ranking metrics, and the config-driven experiment runner.
//!
//! Graphs cross the boundary as `(num_vertices, edge_list)` pairs, where the
//! edge list is a sequence of `(u, v)` vertex-index tuples — the same dense
//! indexing the core uses.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use torgnn::complex::{clique_expand, local_complex};
use torgnn::experiment::{run_experiment as run, ExperimentConfig};
use torgnn::graph::Graph;
use torgnn::spectral::{betti_numbers as betti, log_analytic_torsion};
use torgnn::weights::{load_table, precompute_weights, save_table, TorsionWeightTable};

fn to_py(e: torgnn::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn build_graph(num_vertices: usize, edges: Vec<(u32, u32)>) -> PyResult<Graph> {
    Graph::new(num_vertices, edges).map_err(to_py)
}

/// Log analytic torsion of the order-`n` clique complex of a graph.
#[pyfunction]
fn log_torsion(num_vertices: usize, edges: Vec<(u32, u32)>, n: usize) -> PyResult<f64> {
    let g = build_graph(num_vertices, edges)?;
    let k = clique_expand(&g, n).map_err(to_py)?;
    log_analytic_torsion(&k).map_err(to_py)
}

/// Log analytic torsion of the local complex around the pair `(x, y)`:
/// the order-`n` clique complex of the subgraph induced on the union of
/// the `l_sub`-balls of `x` and `y`.
#[pyfunction]
fn local_torsion(
    num_vertices: usize,
    edges: Vec<(u32, u32)>,
    x: u32,
    y: u32,
    l_sub: u32,
    n: usize,
) -> PyResult<f64> {
    let g = build_graph(num_vertices, edges)?;
    let k = local_complex(&g, x, y, l_sub, n).map_err(to_py)?;
    log_analytic_torsion(&k).map_err(to_py)
}

/// Betti numbers of the order-`n` clique complex, one per dimension.
#[pyfunction]
fn betti_numbers(num_vertices: usize, edges: Vec<(u32, u32)>, n: usize) -> PyResult<Vec<usize>> {
    let g = build_graph(num_vertices, edges)?;
    let k = clique_expand(&g, n).map_err(to_py)?;
    betti(&k).map_err(to_py)
}

/// Area under the ROC curve for binary `labels` ranked by `scores`.
#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    torgnn::metrics::auc(&scores, &labels).map_err(to_py)
}

/// Area under the precision-recall curve (non-interpolated).
#[pyfunction]
fn aupr(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    torgnn::metrics::aupr(&scores, &labels).map_err(to_py)
}

/// Fraction of positions where the two label sequences agree.
#[pyfunction]
fn accuracy(predictions: Vec<usize>, labels: Vec<usize>) -> PyResult<f64> {
    torgnn::metrics::accuracy(&predictions, &labels).map_err(to_py)
}

/// Precomputed torsion edge weights for one graph at one `(l_sub, n)`.
#[pyclass]
struct WeightTable {
    inner: TorsionWeightTable,
}

#[pymethods]
impl WeightTable {
    /// Computes the table: one weight per edge plus one per vertex.
    #[staticmethod]
    fn compute(
        num_vertices: usize,
        edges: Vec<(u32, u32)>,
        l_sub: u32,
        n: usize,
    ) -> PyResult<WeightTable> {
        let g = build_graph(num_vertices, edges)?;
        let inner = precompute_weights(&g, l_sub, n).map_err(to_py)?;
        Ok(WeightTable { inner })
    }

    /// Reads a saved table back, checking it belongs to the given graph.
    #[staticmethod]
    fn load(path: &str, num_vertices: usize, edges: Vec<(u32, u32)>) -> PyResult<WeightTable> {
        let g = build_graph(num_vertices, edges)?;
        let inner = load_table(path, &g).map_err(to_py)?;
        Ok(WeightTable { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_table(&self.inner, path).map_err(to_py)
    }

    /// The weight of edge `(x, y)` (order-insensitive), or of the vertex
    /// when `x == y`; `None` for non-edges.
    fn weight(&self, x: u32, y: u32) -> Option<f64> {
        self.inner.weight(x, y)
    }

    fn edge_weights(&self) -> Vec<f64> {
        self.inner.edge_weights().to_vec()
    }

    fn self_weights(&self) -> Vec<f64> {
        self.inner.self_weights().to_vec()
    }

    fn export_text(&self) -> String {
        self.inner.export_text()
    }

    fn __len__(&self) -> usize {
        self.inner.edges().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "WeightTable(edges={}, vertices={}, l_sub={}, n={})",
            self.inner.edges().len(),
            self.inner.num_vertices(),
            self.inner.l_sub(),
            self.inner.n(),
        )
    }
}

/// Runs a config-file experiment (same format as the CLI `eval` command)
/// and returns the report as a dict: the config echo, per-metric values
/// with mean and standard deviation, and the runtime in seconds.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_path: &str) -> PyResult<Py<PyDict>> {
    let cfg = ExperimentConfig::load(config_path).map_err(to_py)?;
    let report = run(&cfg).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("task", report.task.name())?;
    out.set_item("repeats", report.repeats)?;
    out.set_item("seeds", &report.seeds)?;
    out.set_item("l_sub", report.l_sub)?;
    out.set_item("n", report.n)?;
    out.set_item("lr", report.lr)?;
    out.set_item("epochs", report.epochs)?;
    out.set_item("batch", report.batch)?;
    out.set_item("hidden", report.hidden)?;
    out.set_item("runtime_s", report.runtime_s)?;
    let metrics = PyDict::new(py);
    for series in &report.metrics {
        let entry = PyDict::new(py);
        entry.set_item("values", &series.values)?;
        entry.set_item("mean", series.mean)?;
        entry.set_item("std", series.std)?;
        metrics.set_item(&series.name, entry)?;
    }
    out.set_item("metrics", metrics)?;
    Ok(out.unbind())
}

#[pymodule]
fn torgnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(log_torsion, m)?)?;
    m.add_function(wrap_pyfunction!(local_torsion, m)?)?;
    m.add_function(wrap_pyfunction!(betti_numbers, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(aupr, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<WeightTable>()?;
    Ok(())
}

//! Python bindings. Matrices cross the boundary as lists of rows.

use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use posreduce::clustering::{self, build_characteristic_matrix, AlphaPolicy};
use posreduce::feasible::{self, build_box};
use posreduce::optimizer::{self, certify, AlgoConfig, StopReason};
use posreduce::sysmodel::{self, H2Options};

create_exception!(pyposreduce, PosreduceError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    PosreduceError::new_err(e.to_string())
}

/// Row lists to a matrix; `cols` fixes the width of an empty list.
pub fn from_rows(rows: &[Vec<f64>], cols: Option<usize>) -> Result<DMatrix<f64>, String> {
    let ncols = rows.first().map(Vec::len).or(cols).unwrap_or(0);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(format!("row {i} has {} entries, expected {ncols}", r.len()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn alpha_policy(alpha: Option<f64>) -> AlphaPolicy {
    alpha.map_or(AlphaPolicy::Auto, AlphaPolicy::Fixed)
}

#[pyclass(name = "StateSpaceModel", module = "pyposreduce", skip_from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: sysmodel::StateSpaceModel,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>) -> PyResult<Self> {
        let a = from_rows(&a, None).map_err(err)?;
        let b = from_rows(&b, Some(0)).map_err(err)?;
        let c = from_rows(&c, Some(a.nrows())).map_err(err)?;
        sysmodel::StateSpaceModel::dense(a, b, c).map(|inner| Self { inner }).map_err(err)
    }

    /// Reads a model directory written by `save` or the command-line tool.
    #[staticmethod]
    fn load(dir: &str) -> PyResult<Self> {
        sysmodel::load_model(dir).map(|inner| Self { inner }).map_err(err)
    }

    fn save(&self, dir: &str) -> PyResult<()> {
        sysmodel::save_model(&self.inner, dir).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.a_dense())
    }

    #[getter]
    fn b(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.b())
    }

    #[getter]
    fn c(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.c())
    }

    fn spectral_abscissa(&self) -> PyResult<f64> {
        self.inner.spectral_abscissa().map_err(err)
    }

    fn is_positive(&self) -> bool {
        sysmodel::positivity_report(&self.inner, 0.0).is_positive()
    }

    fn __repr__(&self) -> String {
        format!("StateSpaceModel(n={}, m={}, p={})", self.inner.n(), self.inner.m(), self.inner.p())
    }
}

#[pyclass(name = "ClusterPartition", module = "pyposreduce", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPartition {
    inner: clustering::ClusterPartition,
}

#[pymethods]
impl PyPartition {
    /// `assignment[i]` is the 0-based cluster of node `i`.
    #[new]
    fn new(assignment: Vec<usize>) -> PyResult<Self> {
        clustering::ClusterPartition::from_assignment(assignment).map(|inner| Self { inner }).map_err(err)
    }

    /// Clusters as lists of 0-based node ids.
    #[staticmethod]
    fn from_clusters(n: usize, clusters: Vec<Vec<usize>>) -> PyResult<Self> {
        clustering::ClusterPartition::from_clusters(n, &clusters).map(|inner| Self { inner }).map_err(err)
    }

    /// Partition JSON with 1-based node ids.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        clustering::ClusterPartition::from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_clusters(&self) -> usize {
        self.inner.num_clusters()
    }

    #[getter]
    fn assignment(&self) -> Vec<usize> {
        self.inner.assignment().to_vec()
    }

    fn clusters(&self) -> Vec<Vec<usize>> {
        self.inner.clusters()
    }

    fn __repr__(&self) -> String {
        format!("ClusterPartition(n={}, clusters={})", self.inner.n(), self.inner.num_clusters())
    }
}

/// Result of [`reduce`].
#[pyclass(name = "Reduction", module = "pyposreduce")]
pub struct PyReduction {
    #[pyo3(get)]
    model: PyModel,
    #[pyo3(get)]
    initial: PyModel,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    stop: String,
    #[pyo3(get)]
    initial_f: f64,
    #[pyo3(get)]
    final_f: f64,
    #[pyo3(get)]
    final_residual: f64,
    #[pyo3(get)]
    f_values: Vec<f64>,
    #[pyo3(get)]
    residuals: Vec<f64>,
    #[pyo3(get)]
    descent_violations: Vec<usize>,
    #[pyo3(get)]
    warnings: Vec<String>,
    certificate: String,
}

#[pymethods]
impl PyReduction {
    /// Feasibility certificate of the final model as a dict.
    #[getter]
    fn certificate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (&self.certificate,))
    }

    fn __repr__(&self) -> String {
        format!("Reduction(r={}, iterations={}, final_f={:e})", self.model.inner.n(), self.iterations, self.final_f)
    }
}

/// 2-D heat benchmark on a `k x k` grid; also returns the 16-cluster
/// partition when `k` is divisible by 4.
#[pyfunction]
fn heat2d(k: usize) -> PyResult<(PyModel, Option<PyPartition>)> {
    let (inner, hint) = sysmodel::heat2d(k).map_err(err)?;
    Ok((PyModel { inner }, hint.map(|inner| PyPartition { inner })))
}

/// Aggregated model and the shift actually used; `alpha=None` selects it.
#[pyfunction]
#[pyo3(signature = (full, partition, alpha=None))]
fn initial_reduced_model(full: &PyModel, partition: &PyPartition, alpha: Option<f64>) -> PyResult<(PyModel, f64)> {
    let pi = build_characteristic_matrix(&partition.inner);
    let (inner, used) = clustering::initial_reduced_model(&full.inner, &pi, alpha_policy(alpha)).map_err(err)?;
    Ok((PyModel { inner }, used))
}

#[pyfunction]
fn h2_norm_squared(model: &PyModel) -> PyResult<f64> {
    sysmodel::h2_norm_squared(&model.inner, &H2Options::default()).map_err(err)
}

#[pyfunction]
fn h2_error_squared(full: &PyModel, reduced: &PyModel) -> PyResult<f64> {
    sysmodel::h2_error_squared(&full.inner, &reduced.inner, &H2Options::default()).map_err(err)
}

/// Perron root and normalized right/left vectors of an irreducible stable
/// Metzler matrix.
#[pyfunction]
fn perron(a: Vec<Vec<f64>>) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let a = from_rows(&a, None).map_err(err)?;
    let p = feasible::perron(&a).map_err(err)?;
    Ok((p.mu1, p.v1.iter().copied().collect(), p.w1.iter().copied().collect()))
}

/// Aggregates `full` over `partition` and refines the result with the
/// cyclic block projected gradient method.
#[pyfunction]
#[pyo3(signature = (
    full, partition, *, alpha=None, max_iters=100, c=1.1, c1=1.0, c2=1.0,
    epsilon=1e-6, gamma=1e7, stat_tol=1e-8, adaptive=false
))]
#[allow(clippy::too_many_arguments)]
fn reduce(
    py: Python<'_>,
    full: &PyModel,
    partition: &PyPartition,
    alpha: Option<f64>,
    max_iters: usize,
    c: f64,
    c1: f64,
    c2: f64,
    epsilon: f64,
    gamma: f64,
    stat_tol: f64,
    adaptive: bool,
) -> PyResult<PyReduction> {
    let cfg = AlgoConfig { c, c1, c2, epsilon, gamma, max_iters, stat_tol, adaptive, ..Default::default() };
    cfg.validate().map_err(err)?;
    let full = &full.inner;
    let pi = build_characteristic_matrix(&partition.inner);
    let (red0, alpha) = clustering::initial_reduced_model(full, &pi, alpha_policy(alpha)).map_err(err)?;
    let a0 = red0.a_dense();
    feasible::require_irreducible(&a0).map_err(err)?;
    let pattern = clustering::reduced_graph_pattern(&red0, 0.0).map_err(err)?;
    let bx = build_box(&a0, epsilon, gamma).map_err(err)?;
    let out = py
        .detach(|| optimizer::run_algorithm1(full, &red0, &bx, &pattern, &cfg))
        .map_err(err)?;
    let cert = certify(&out.model, &pattern, epsilon).map_err(err)?;
    Ok(PyReduction {
        initial: PyModel { inner: red0 },
        alpha,
        iterations: out.iterations,
        stop: match out.stop {
            StopReason::Stationary => "stationary",
            StopReason::MaxIterations => "max_iterations",
            StopReason::Failed => "failed",
        }
        .into(),
        initial_f: out.initial_f,
        final_f: out.final_f,
        final_residual: out.final_residual,
        f_values: out.trace.f_values(),
        residuals: out.trace.records.iter().map(|r| r.residual).collect(),
        descent_violations: out.descent_violations,
        warnings: out.warnings,
        certificate: serde_json::to_string(&cert).map_err(err)?,
        model: PyModel { inner: out.model },
    })
}

#[pymodule]
fn pyposreduce(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PosreduceError", m.py().get_type::<PosreduceError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyPartition>()?;
    m.add_class::<PyReduction>()?;
    m.add_function(wrap_pyfunction!(heat2d, m)?)?;
    m.add_function(wrap_pyfunction!(initial_reduced_model, m)?)?;
    m.add_function(wrap_pyfunction!(h2_norm_squared, m)?)?;
    m.add_function(wrap_pyfunction!(h2_error_squared, m)?)?;
    m.add_function(wrap_pyfunction!(perron, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = from_rows(&rows, None).unwrap();
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(to_rows(&m), rows);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(from_rows(&[vec![1.0], vec![1.0, 2.0]], None).is_err());
    }

    #[test]
    fn empty_rows_take_given_width() {
        let m = from_rows(&[], Some(3)).unwrap();
        assert_eq!(m.shape(), (0, 3));
    }
}

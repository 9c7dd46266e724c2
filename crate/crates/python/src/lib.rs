//! Python bindings. Matrices cross the boundary as lists of rows; NumPy arrays
//! can be passed after `.tolist()` and rebuilt with `numpy.array(...)`.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gilda::bench::{self, SweepSpec};
use gilda::datagen::DataSpec;
use gilda::{AmbientMatrix, GildaError, GrassmannPoint, LabeledDataset, OptConfig, ScatterPair};

type Rows = Vec<Vec<f64>>;

fn to_py_err(e: GildaError) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.code()))
}

fn matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(PyValueError::new_err("ragged matrix: rows differ in length"));
    }
    Ok(DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn point(rows: &Rows) -> PyResult<GrassmannPoint> {
    GrassmannPoint::new(matrix(rows)?).map_err(to_py_err)
}

fn ambient(rows: &Rows) -> PyResult<AmbientMatrix> {
    AmbientMatrix::new(matrix(rows)?).map_err(to_py_err)
}

fn scatter(within: &Rows, between: &Rows) -> PyResult<ScatterPair> {
    ScatterPair::new(matrix(within)?, matrix(between)?).map_err(to_py_err)
}

fn config(step_size: f64, max_iters: usize, rel_tol: f64, svd_gap_min: f64, momentum: f64) -> OptConfig {
    OptConfig { step_size, max_iters, rel_tol, svd_gap_min, momentum }
}

/// Result of an optimizer run.
#[pyclass(name = "OptRun", frozen)]
struct PyOptRun {
    #[pyo3(get)]
    final_point: Rows,
    #[pyo3(get)]
    final_objective: f64,
    #[pyo3(get)]
    best_iteration: usize,
    /// Objective at every evaluated iterate.
    #[pyo3(get)]
    trace: Vec<f64>,
    #[pyo3(get)]
    iterations_used: usize,
    #[pyo3(get)]
    converged: bool,
}

#[pymethods]
impl PyOptRun {
    fn __repr__(&self) -> String {
        format!(
            "OptRun(final_objective={}, iterations_used={}, converged={})",
            self.final_objective, self.iterations_used, self.converged
        )
    }
}

impl From<gilda::OptRun> for PyOptRun {
    fn from(run: gilda::OptRun) -> Self {
        Self {
            final_point: rows(run.final_point.as_matrix()),
            final_objective: run.final_objective,
            best_iteration: run.best_iteration,
            trace: run.trace.iter().map(|t| t.objective).collect(),
            iterations_used: run.iterations_used,
            converged: run.converged,
        }
    }
}

/// Within- and between-class scatter of column-sample data. Returns `(Σ_W, Σ_B)`.
#[pyfunction]
fn scatter_matrices(data: Rows, labels: Vec<usize>) -> PyResult<(Rows, Rows)> {
    let ds = LabeledDataset::from_labels(matrix(&data)?, labels).map_err(to_py_err)?;
    let s = gilda::scatter_matrices(&ds);
    Ok((rows(s.within()), rows(s.between())))
}

#[pyfunction]
fn trace_ratio_objective(r: Rows, within: Rows, between: Rows) -> PyResult<f64> {
    gilda::trace_ratio_objective(&point(&r)?, &scatter(&within, &between)?).map_err(to_py_err)
}

#[pyfunction]
fn objective_gradient(r: Rows, within: Rows, between: Rows) -> PyResult<Rows> {
    let g = gilda::objective_gradient(&point(&r)?, &scatter(&within, &between)?).map_err(to_py_err)?;
    Ok(rows(g.as_matrix()))
}

#[pyfunction]
fn eigenvector_solution(within: Rows, between: Rows, p: usize) -> PyResult<Rows> {
    let r = gilda::eigenvector_solution(&scatter(&within, &between)?, p).map_err(to_py_err)?;
    Ok(rows(r.as_matrix()))
}

#[pyfunction]
fn tangent_project(y: Rows, z: Rows) -> PyResult<Rows> {
    let t = gilda::tangent_project(&point(&y)?, &ambient(&z)?).map_err(to_py_err)?;
    Ok(rows(t.as_matrix()))
}

#[pyfunction]
fn riemannian_gradient(y: Rows, euclid_grad: Rows) -> PyResult<Rows> {
    let g = gilda::riemannian_gradient(&point(&y)?, &ambient(&euclid_grad)?).map_err(to_py_err)?;
    Ok(rows(g.as_matrix()))
}

#[pyfunction]
fn retract(z: Rows) -> PyResult<Rows> {
    let r = gilda::retract(&ambient(&z)?).map_err(to_py_err)?;
    Ok(rows(r.as_matrix()))
}

#[pyfunction]
#[pyo3(signature = (p, upstream, svd_gap_min = 1e-6))]
fn retraction_vjp(p: Rows, upstream: Rows, svd_gap_min: f64) -> PyResult<Rows> {
    let g = gilda::retraction_vjp(&ambient(&p)?, &ambient(&upstream)?, svd_gap_min).map_err(to_py_err)?;
    Ok(rows(g.as_matrix()))
}

#[pyfunction]
#[pyo3(signature = (within, between, p0, step_size = 1e-2, max_iters = 1000, rel_tol = 1e-9, svd_gap_min = 1e-6, momentum = 0.0))]
#[allow(clippy::too_many_arguments)]
fn pmo_optimize(
    within: Rows,
    between: Rows,
    p0: Rows,
    step_size: f64,
    max_iters: usize,
    rel_tol: f64,
    svd_gap_min: f64,
    momentum: f64,
) -> PyResult<PyOptRun> {
    let cfg = config(step_size, max_iters, rel_tol, svd_gap_min, momentum);
    let run = gilda::pmo_optimize(&scatter(&within, &between)?, &ambient(&p0)?, &cfg).map_err(to_py_err)?;
    Ok(run.into())
}

#[pyfunction]
#[pyo3(signature = (within, between, r0, step_size = 1e-2, max_iters = 1000, rel_tol = 1e-9, svd_gap_min = 1e-6, momentum = 0.0))]
#[allow(clippy::too_many_arguments)]
fn two_step_optimize(
    within: Rows,
    between: Rows,
    r0: Rows,
    step_size: f64,
    max_iters: usize,
    rel_tol: f64,
    svd_gap_min: f64,
    momentum: f64,
) -> PyResult<PyOptRun> {
    let cfg = config(step_size, max_iters, rel_tol, svd_gap_min, momentum);
    let run = gilda::two_step_optimize(&scatter(&within, &between)?, &point(&r0)?, &cfg).map_err(to_py_err)?;
    Ok(run.into())
}

/// Synthetic Gaussian classes. Returns `(data, labels)` with one sample per column.
#[pyfunction]
#[pyo3(signature = (dim, n_classes, n_per_class, ecc_mean = 2.0, mean_std = 1.0, seed = 0))]
fn generate_dataset(
    dim: usize,
    n_classes: usize,
    n_per_class: usize,
    ecc_mean: f64,
    mean_std: f64,
    seed: u64,
) -> PyResult<(Rows, Vec<usize>)> {
    let spec = DataSpec { dim, n_classes, n_per_class, ecc_mean, mean_std, seed };
    let ds = gilda::datagen::generate_dataset(&spec).map_err(to_py_err)?;
    Ok((rows(ds.data()), ds.labels().to_vec()))
}

#[pyfunction]
fn normalized_improvement(f_orth: f64, f_eig: f64) -> PyResult<f64> {
    bench::normalized_improvement(f_orth, f_eig).map_err(to_py_err)
}

/// Runs a preset sweep (`"desk_dim"`, `"paper_dim"`, `"desk_proj"`, `"paper_proj"`)
/// and returns the per-cell CSV text.
#[pyfunction]
#[pyo3(signature = (preset, seed = 42, values = None, repetitions = None))]
fn run_sweep(preset: &str, seed: u64, values: Option<Vec<usize>>, repetitions: Option<usize>) -> PyResult<String> {
    let mut spec = match preset {
        "desk_dim" => SweepSpec::desk_dim(seed),
        "paper_dim" => SweepSpec::paper_dim(seed),
        "desk_proj" => SweepSpec::desk_proj(seed),
        "paper_proj" => SweepSpec::paper_proj(seed),
        other => return Err(PyValueError::new_err(format!("unknown preset {other:?}"))),
    };
    if let Some(v) = values {
        spec.values = v;
    }
    if let Some(n) = repetitions {
        spec.repetitions = n;
    }
    let result = bench::run_sweep(&spec).map_err(to_py_err)?;
    let mut out = Vec::new();
    bench::write_csv(&result, &mut out).map_err(|e| PyValueError::new_err(e.to_string()))?;
    String::from_utf8(out).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pygilda(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOptRun>()?;
    m.add_function(wrap_pyfunction!(scatter_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(trace_ratio_objective, m)?)?;
    m.add_function(wrap_pyfunction!(objective_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvector_solution, m)?)?;
    m.add_function(wrap_pyfunction!(tangent_project, m)?)?;
    m.add_function(wrap_pyfunction!(riemannian_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(retract, m)?)?;
    m.add_function(wrap_pyfunction!(retraction_vjp, m)?)?;
    m.add_function(wrap_pyfunction!(pmo_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(two_step_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}

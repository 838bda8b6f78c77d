//! Python bindings for `somor`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use somor::benchmarks::{gen_dsms, gen_random, gen_tcom, DsmsParams, TcomParams};
use somor::bt::{balanced_truncate, projected_first_order, DenseFirstOrderSystem};
use somor::freq::{error_curves, full_response, reduced_response, FrequencyGrid};
use somor::io::{load_model, save_model, ReducedModel, ReducedModelFile};
use somor::irka::{irka_reduce, ConvergenceStatus, IrkaOptions};
use somor::model::{embed_first_order, validate_system};
use somor::saddle::SaddleAssembler;
use somor::verify::{run_suite, Tier};
use somor::{Error, ReducedSecondOrderModel, SecondOrderIndex3System};

create_exception!(somor_py, NumericalError, PyRuntimeError, "A factorization, eigenvalue or stability failure.");

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Parameter(_) | Error::Dimension(_) | Error::DenseCap { .. } => PyValueError::new_err(err.to_string()),
        Error::Io(_) | Error::Json(_) | Error::Manifest(_) | Error::MatrixMarket { .. } => PyIOError::new_err(err.to_string()),
        other => NumericalError::new_err(other.to_string()),
    }
}

fn rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn crows(a: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn matrix(name: &str, data: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let nrows = data.len();
    let ncols = data.first().map_or(0, Vec::len);
    if data.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| data[i][j]))
}

fn status_name(s: ConvergenceStatus) -> &'static str {
    match s {
        ConvergenceStatus::Converged => "converged",
        ConvergenceStatus::MaxIterations => "max-iterations",
        ConvergenceStatus::Stagnated => "stagnated",
    }
}

/// Sparse second-order index-3 system.
#[pyclass(name = "System", module = "somor_py", frozen)]
struct PySystem {
    inner: SecondOrderIndex3System,
}

#[pymethods]
impl PySystem {
    /// Chain of masses with spread two-point constraints.
    #[staticmethod]
    #[pyo3(signature = (n1, n2, seed = 0))]
    fn dsms(n1: usize, n2: usize, seed: u64) -> PyResult<Self> {
        let p = DsmsParams { seed, ..DsmsParams::new(n1, n2) };
        Ok(Self { inner: gen_dsms(&p).map_err(to_py)? })
    }

    /// Three coupled chains of length `g` with cross-chain constraints.
    #[staticmethod]
    #[pyo3(signature = (g, n2, seed = 0))]
    fn tcom(g: usize, n2: usize, seed: u64) -> PyResult<Self> {
        let p = TcomParams { seed, ..TcomParams::new(g, n2) };
        Ok(Self { inner: gen_tcom(&p).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n1, n2, m = 1, q = 1, seed = 0))]
    fn random(n1: usize, n2: usize, m: usize, q: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: gen_random(n1, n2, m, q, seed).map_err(to_py)? })
    }

    /// Reads a model directory written by `save` or `somor generate`.
    #[staticmethod]
    fn load(dir: std::path::PathBuf) -> PyResult<Self> {
        let (inner, _) = load_model(dir).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn save(&self, dir: std::path::PathBuf) -> PyResult<()> {
        save_model(dir, &self.inner, "custom", serde_json::Value::Null).map_err(to_py)?;
        Ok(())
    }

    #[getter]
    fn n1(&self) -> usize {
        self.inner.n1()
    }

    #[getter]
    fn n2(&self) -> usize {
        self.inner.n2()
    }

    #[getter]
    fn inputs(&self) -> usize {
        self.inner.inputs()
    }

    #[getter]
    fn outputs(&self) -> usize {
        self.inner.outputs()
    }

    /// Structural checks; raises on failure, returns the report otherwise.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = validate_system(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("n1", r.n1)?;
        d.set_item("n2", r.n2)?;
        d.set_item("inputs", r.inputs)?;
        d.set_item("outputs", r.outputs)?;
        d.set_item("g_rank", r.g_rank)?;
        d.set_item("mass_rcond", r.mass_rcond)?;
        Ok(d)
    }

    /// `T(s)` as a q x m nested list of complex numbers.
    fn transfer(&self, s: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        let asm = SaddleAssembler::new(&self.inner).map_err(to_py)?;
        Ok(crows(&somor::freq::full_transfer(&asm, s).map_err(to_py)?))
    }

    /// `(omegas, sigma_max)` on a log grid; `None` marks pole hits.
    #[pyo3(signature = (lo, hi, points = 200))]
    fn frequency_response(&self, py: Python<'_>, lo: f64, hi: f64, points: usize) -> PyResult<(Vec<f64>, Vec<Option<f64>>)> {
        let grid = FrequencyGrid::log_spaced(lo, hi, points).map_err(to_py)?;
        let t = py.detach(|| full_response(&self.inner, &grid)).map_err(to_py)?;
        Ok((t.omegas, t.sigma_max))
    }

    fn __repr__(&self) -> String {
        format!(
            "System(n1={}, n2={}, inputs={}, outputs={})",
            self.inner.n1(),
            self.inner.n2(),
            self.inner.inputs(),
            self.inner.outputs()
        )
    }
}

/// Dense reduced second-order model.
#[pyclass(name = "ReducedModel", module = "somor_py", frozen)]
struct PyReducedModel {
    inner: ReducedSecondOrderModel,
}

#[pymethods]
impl PyReducedModel {
    #[new]
    fn new(m: Vec<Vec<f64>>, d: Vec<Vec<f64>>, k: Vec<Vec<f64>>, f: Vec<Vec<f64>>, l: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = ReducedSecondOrderModel::new(
            matrix("M", m)?,
            matrix("D", d)?,
            matrix("K", k)?,
            matrix("F", f)?,
            matrix("L", l)?,
        )
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        match ReducedModelFile::load(path).and_then(|f| f.to_model()).map_err(to_py)? {
            ReducedModel::SecondOrder(inner) => Ok(Self { inner }),
            ReducedModel::FirstOrder(_) => Err(PyValueError::new_err("file holds a first-order model")),
        }
    }

    #[pyo3(signature = (path, method = "irka"))]
    fn save(&self, path: std::path::PathBuf, method: &str) -> PyResult<()> {
        let model = ReducedModel::SecondOrder(self.inner.clone());
        ReducedModelFile::new(&model, method, None).save(path).map_err(to_py)
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn m(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.mr)
    }

    #[getter]
    fn d(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.dr)
    }

    #[getter]
    fn k(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.kr)
    }

    #[getter]
    fn f(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.fr)
    }

    #[getter]
    fn l(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.lr)
    }

    fn transfer(&self, s: Complex64) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(crows(&self.inner.transfer(s).map_err(to_py)?))
    }

    /// Eigenvalues of the first-order embedding.
    fn poles(&self) -> PyResult<Vec<Complex64>> {
        embed_first_order(&self.inner).and_then(|f| f.poles()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "ReducedModel(order={}, inputs={}, outputs={})",
            self.inner.order(),
            self.inner.inputs(),
            self.inner.outputs()
        )
    }
}

/// IRKA reduction. Returns `(model, info)`; `info["status"]` is one of
/// `converged`, `max-iterations`, `stagnated`.
#[pyfunction]
#[pyo3(signature = (system, r, tol = 1e-4, max_iter = 50, band = (1e-2, 1.0), seed = 0))]
fn irka<'py>(
    py: Python<'py>,
    system: &PySystem,
    r: usize,
    tol: f64,
    max_iter: usize,
    band: (f64, f64),
    seed: u64,
) -> PyResult<(PyReducedModel, Bound<'py, PyDict>)> {
    let opts = IrkaOptions { max_iter, tol, band, seed };
    let out = py.detach(|| irka_reduce(&system.inner, r, &opts)).map_err(to_py)?;
    let info = PyDict::new(py);
    info.set_item("status", status_name(out.trace.status))?;
    info.set_item("iterations", out.trace.iterations.len())?;
    let changes: Vec<Option<f64>> = out.trace.iterations.iter().map(|it| it.shift_change).collect();
    info.set_item("shift_changes", changes)?;
    info.set_item("shifts", out.shifts.sorted_alphas())?;
    Ok((PyReducedModel { inner: out.rom }, info))
}

/// Dense balanced truncation of the projected system. Returns a dict with
/// `E`, `A`, `B`, `C` and the Hankel singular values.
#[pyfunction]
#[pyo3(signature = (system, k, dense_cap = 2000))]
fn balanced_truncation<'py>(py: Python<'py>, system: &PySystem, k: usize, dense_cap: usize) -> PyResult<Bound<'py, PyDict>> {
    let red = py
        .detach(|| projected_first_order(&system.inner, dense_cap).and_then(|fo| balanced_truncate(&fo, k)))
        .map_err(to_py)?;
    let DenseFirstOrderSystem { e, a, b, c } = &red.reduced;
    let d = PyDict::new(py);
    d.set_item("E", rows(e))?;
    d.set_item("A", rows(a))?;
    d.set_item("B", rows(b))?;
    d.set_item("C", rows(c))?;
    d.set_item("hankel", red.hankel.clone())?;
    d.set_item("order", red.order)?;
    Ok(d)
}

/// `(omegas, absolute, relative)` error of `model` against `system`.
#[pyfunction]
#[pyo3(signature = (system, model, lo, hi, points = 200))]
#[allow(clippy::type_complexity)]
fn error_curve(
    py: Python<'_>,
    system: &PySystem,
    model: &PyReducedModel,
    lo: f64,
    hi: f64,
    points: usize,
) -> PyResult<(Vec<f64>, Vec<Option<f64>>, Vec<Option<f64>>)> {
    let grid = FrequencyGrid::log_spaced(lo, hi, points).map_err(to_py)?;
    let e = py
        .detach(|| {
            let full = full_response(&system.inner, &grid)?;
            let red = reduced_response(&model.inner, &grid)?;
            error_curves(&full, &red)
        })
        .map_err(to_py)?;
    Ok((e.omegas, e.absolute, e.relative))
}

/// Runs the invariant suite (`tiny` or `small`) and returns
/// `(passed, [(name, value, tolerance, passed), ...])`.
#[pyfunction]
#[pyo3(signature = (tier = "tiny"))]
#[allow(clippy::type_complexity)]
fn verify(py: Python<'_>, tier: &str) -> PyResult<(bool, Vec<(String, f64, f64, bool)>)> {
    let tier: Tier = tier.parse().map_err(to_py)?;
    let report = py.detach(|| run_suite(tier));
    let checks = report.checks.into_iter().map(|c| (c.name, c.value, c.tolerance, c.passed)).collect();
    Ok((report.passed, checks))
}

#[pymodule]
pub fn somor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyReducedModel>()?;
    m.add_function(wrap_pyfunction!(irka, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_truncation, m)?)?;
    m.add_function(wrap_pyfunction!(error_curve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

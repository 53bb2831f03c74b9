//! Python bindings: symbols, index computations, pairings and the acceptance criteria.

use std::collections::BTreeMap;

use indexlab::acceptance::CRITERIA;
use indexlab::cylinder::{compress_index, verify_scalar_bounds, ScalarGrids};
use indexlab::pairing::{cocycle_identities, cylinder_pairing};
use indexlab::toeplitz::{fredholm_index, index_theorem_check};
use indexlab::{c64, corpus, Error, TrigSymbol, TruncationPolicy};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py(e: Error) -> PyErr {
    match indexlab::cli::exit_code(&e) {
        indexlab::cli::EXIT_ASSERTION => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_object<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn policy(max_attempts: Option<usize>) -> TruncationPolicy {
    let p = TruncationPolicy::default();
    match max_attempts {
        Some(n) => p.with_max_attempts(n),
        None => p,
    }
}

/// Matrix-valued trigonometric polynomial on the circle.
#[pyclass(name = "Symbol", frozen)]
struct PySymbol {
    inner: TrigSymbol,
}

#[pymethods]
impl PySymbol {
    /// Scalar symbol from `{mode: coefficient}`.
    #[new]
    fn new(coeffs: BTreeMap<i64, c64>) -> PyResult<Self> {
        let pairs: Vec<(i64, c64)> = coeffs.into_iter().collect();
        Ok(Self { inner: TrigSymbol::scalar(&pairs).map_err(to_py)? })
    }

    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Self { inner: corpus::builtin(name).map_err(to_py)? })
    }

    #[staticmethod]
    fn builtin_names() -> Vec<&'static str> {
        corpus::BUILTIN_NAMES.to_vec()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: TrigSymbol::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn evaluate(&self, theta: f64) -> Vec<Vec<c64>> {
        let m = self.inner.evaluate(theta);
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn winding(&self) -> PyResult<i64> {
        self.inner.winding().map_err(to_py)
    }

    fn is_invertible(&self) -> bool {
        self.inner.ensure_invertible().is_ok()
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.mul(&other.inner).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("Symbol(size={}, degree={})", self.inner.size(), self.inner.degree())
    }
}

/// Stabilized index of the Toeplitz operator on the circle Hardy space.
#[pyfunction]
#[pyo3(signature = (symbol, max_attempts=None))]
fn toeplitz_index<'py>(py: Python<'py>, symbol: &PySymbol, max_attempts: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &fredholm_index(&symbol.inner, &policy(max_attempts)).map_err(to_py)?)
}

/// Index report together with the winding comparison.
#[pyfunction]
#[pyo3(signature = (symbol, max_attempts=None))]
fn index_theorem<'py>(py: Python<'py>, symbol: &PySymbol, max_attempts: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &index_theorem_check(&symbol.inner, &policy(max_attempts)).map_err(to_py)?)
}

/// Index of the cylinder operator compressed to the half-line.
#[pyfunction]
#[pyo3(signature = (symbol, max_attempts=None))]
fn cylinder_index<'py>(py: Python<'py>, symbol: &PySymbol, max_attempts: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &compress_index(&symbol.inner, &policy(max_attempts)).map_err(to_py)?)
}

/// Pairing of the cylinder operator with the line grading, next to its index.
#[pyfunction]
fn pairing<'py>(py: Python<'py>, symbol: &PySymbol) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &cylinder_pairing(&symbol.inner, &TruncationPolicy::default()).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (seed=0, n_max=8, trials=16))]
fn cocycle_check<'py>(py: Python<'py>, seed: u64, n_max: i64, trials: usize) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, &cocycle_identities(seed, n_max, trials).map_err(to_py)?)
}

/// Runs the scalar bound families on the default grids.
#[pyfunction]
fn scalar_bounds<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| verify_scalar_bounds(&ScalarGrids::default()));
    to_object(py, &report)
}

/// Evaluates one acceptance criterion (1 to 10).
#[pyfunction]
fn criterion<'py>(py: Python<'py>, id: usize) -> PyResult<Bound<'py, PyAny>> {
    let run = CRITERIA
        .get(id.wrapping_sub(1))
        .ok_or_else(|| PyValueError::new_err(format!("criterion {id} does not exist")))?;
    let result = py.detach(run);
    to_object(py, &result)
}

#[pymodule]
#[pyo3(name = "indexlab")]
fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymbol>()?;
    m.add_function(wrap_pyfunction!(toeplitz_index, m)?)?;
    m.add_function(wrap_pyfunction!(index_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(cylinder_index, m)?)?;
    m.add_function(wrap_pyfunction!(pairing, m)?)?;
    m.add_function(wrap_pyfunction!(cocycle_check, m)?)?;
    m.add_function(wrap_pyfunction!(scalar_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(criterion, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

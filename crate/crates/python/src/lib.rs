//! Python bindings for `cuspext`. Structured results come back as plain
//! dicts and lists; exponents cross the boundary as rational strings.

use std::sync::Arc;

use cuspext::cli::{DomainSpec, MapSpec};
use cuspext::extension::{self, ExtensionDirection};
use cuspext::integrability::{self, classify_integrability};
use cuspext::maps::{distortion_at, PlanarMap};
use cuspext::sharpness;
use cuspext::sobolev::{self, TestFunction};
use cuspext::{Error, Exponent, Point, QuadratureSpec};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Parse(_) | Error::Precondition(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn exponent(s: &str) -> PyResult<Exponent> {
    s.parse().map_err(py_err)
}

fn direction(s: &str) -> PyResult<ExtensionDirection> {
    s.parse().map_err(py_err)
}

fn quadrature(n: usize, levels: u32) -> PyResult<QuadratureSpec> {
    let spec = QuadratureSpec::new(n, levels);
    spec.validate().map_err(py_err)?;
    Ok(spec)
}

/// A planar map built from a config-style spec, e.g. `Map("angular-stretch", s=2.0)`.
#[pyclass(frozen)]
struct Map {
    spec: MapSpec,
    inner: Arc<dyn PlanarMap>,
}

#[pymethods]
impl Map {
    #[new]
    #[pyo3(signature = (kind, **params))]
    fn new(py: Python<'_>, kind: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let dict = match params {
            Some(p) => p.copy()?,
            None => PyDict::new(py),
        };
        dict.set_item("kind", kind)?;
        let spec: MapSpec = from_py(dict.as_any())?;
        let inner = spec.build().map_err(py_err)?;
        Ok(Map { spec, inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.spec)
    }

    fn eval(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let w = self.inner.eval(Point::new(x, y)).map_err(py_err)?;
        Ok((w.x, w.y))
    }

    fn inverse(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let z = self.inner.inverse(Point::new(x, y)).map_err(py_err)?;
        Ok((z.x, z.y))
    }

    /// Jacobian as `[[a, b], [c, d]]`.
    fn jacobian(&self, x: f64, y: f64) -> PyResult<[[f64; 2]; 2]> {
        let m = self.inner.jacobian(Point::new(x, y)).map_err(py_err)?;
        Ok([[m.a, m.b], [m.c, m.d]])
    }

    fn distortion(&self, x: f64, y: f64) -> PyResult<f64> {
        distortion_at(self.inner.as_ref(), Point::new(x, y)).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Map({})", self.inner.name())
    }
}

/// Cutoff series of `∫ K^p` over a region given as a dict such as
/// `{"kind": "polar-cusp-complement", "s": 2.0}`.
#[pyfunction]
#[pyo3(signature = (map, domain, p, n = 64, levels = 16))]
fn integrate_distortion<'py>(
    py: Python<'py>,
    map: &Map,
    domain: &Bound<'py, PyAny>,
    p: &str,
    n: usize,
    levels: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let region = from_py::<DomainSpec>(domain)?.build().map_err(py_err)?;
    let spec = quadrature(n, levels)?;
    let series = py
        .detach(|| integrability::integrate_distortion(map.inner.as_ref(), &region, &exponent(p)?, &spec).map_err(py_err))?;
    to_py(py, &series)
}

/// Verdict (`finite`, `divergent`, `inconclusive`) for a cutoff series.
#[pyfunction]
fn classify(values: Vec<f64>) -> PyResult<String> {
    Ok(classify_integrability(&values).map_err(py_err)?.to_string())
}

/// Sobolev exponents `(P, Q)` of the extension, as rational strings.
#[pyfunction]
#[pyo3(signature = (p, q, direction = "in"))]
fn extension_exponents(p: &str, q: &str, direction: &str) -> PyResult<(String, String)> {
    let dir = self::direction(direction)?;
    let (big_p, big_q) = extension::extension_exponents(&exponent(p)?, &exponent(q)?, dir).map_err(py_err)?;
    Ok((big_p.to_string(), big_q.to_string()))
}

/// The cusp reflection `R̃` across the boundary of the model cusp of degree `s`.
#[pyfunction]
fn reflect(s: f64, x: f64, y: f64) -> PyResult<(f64, f64)> {
    let w = extension::reflect(s, Point::new(x, y)).map_err(py_err)?;
    Ok((w.x, w.y))
}

/// Test function from a dict such as `{"family": "angular-jump", "gamma": 0.1}`.
fn test_function(obj: &Bound<'_, PyAny>) -> PyResult<TestFunction> {
    from_py(obj)
}

/// Symbolic and quadrature membership of a test function in a homogeneous Sobolev space.
#[pyfunction]
#[pyo3(signature = (function, domain, p, n = 16, levels = 40))]
fn membership<'py>(
    py: Python<'py>,
    function: &Bound<'py, PyAny>,
    domain: &Bound<'py, PyAny>,
    p: &str,
    n: usize,
    levels: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let u = test_function(function)?;
    let region = from_py::<DomainSpec>(domain)?.build().map_err(py_err)?;
    let spec = quadrature(n, levels)?;
    let report = py.detach(|| sobolev::membership(&u, &region, &exponent(p)?, &spec).map_err(py_err))?;
    to_py(py, &report)
}

/// Norm-ratio series of the reflection extension for a cusp of degree `s`
/// with distortion exponent `q` on the cusp side.
#[pyfunction]
#[pyo3(signature = (function, s, q, direction = "in", r_u = 0.5, n = 64, levels = 6))]
#[allow(clippy::too_many_arguments)]
fn norm_ratio<'py>(
    py: Python<'py>,
    function: &Bound<'py, PyAny>,
    s: f64,
    q: &str,
    direction: &str,
    r_u: f64,
    n: usize,
    levels: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let u = test_function(function)?;
    let dir = self::direction(direction)?;
    let spec = quadrature(n, levels)?;
    let (big_p, big_q) = extension::extension_exponents(&Exponent::Infinite, &exponent(q)?, dir).map_err(py_err)?;
    let report = py.detach(|| extension::norm_ratio(&u, s, &big_p, &big_q, r_u, dir, &spec).map_err(py_err))?;
    to_py(py, &report)
}

/// Exact threshold table over rational grids given as strings.
#[pyfunction]
fn threshold_scan<'py>(py: Python<'py>, ps: Vec<String>, qs: Vec<String>, ss: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    let parse = |list: &[String]| -> PyResult<Vec<_>> {
        list.iter()
            .map(|s| cuspext::exponent::parse_rational(s).map_err(py_err))
            .collect()
    };
    let table = sharpness::threshold_scan(&parse(&ps)?, &parse(&qs)?, &parse(&ss)?).map_err(py_err)?;
    to_py(py, &table)
}

/// The exponential-cusp demonstration report.
#[pyfunction]
#[pyo3(signature = (n = 128, levels = 16))]
fn l1_demo(py: Python<'_>, n: usize, levels: u32) -> PyResult<Bound<'_, PyAny>> {
    let spec = quadrature(n, levels)?;
    let report = py.detach(|| sharpness::l1_quasidisk_demo(&spec).map_err(py_err))?;
    to_py(py, &report)
}

/// Runs the command line with `argv` (program name excluded); returns the exit code.
#[pyfunction]
fn run(py: Python<'_>, argv: Vec<String>) -> u8 {
    py.detach(|| cuspext::cli::run(std::iter::once("cuspext".to_string()).chain(argv)))
}

#[pymodule]
fn pycuspext(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", cuspext::VERSION)?;
    m.add_class::<Map>()?;
    m.add_function(wrap_pyfunction!(integrate_distortion, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(extension_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(reflect, m)?)?;
    m.add_function(wrap_pyfunction!(membership, m)?)?;
    m.add_function(wrap_pyfunction!(norm_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_scan, m)?)?;
    m.add_function(wrap_pyfunction!(l1_demo, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

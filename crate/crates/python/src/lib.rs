//! Python bindings. Reports come back as dictionaries built from the same
//! JSON the command line tool prints.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use toeplitz_regulator as core;
use toeplitz_regulator::harness::{self, RunConfig};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn config(grid: usize, dim_n: usize, trunc_m: usize) -> PyResult<RunConfig> {
    let c = RunConfig {
        grid,
        dim_n,
        trunc_m,
        ..RunConfig::default()
    };
    c.validate().map_err(err)?;
    Ok(c)
}

/// Samples of a function on the circle at `theta_j = 2 pi j / G`.
#[pyclass(name = "CircleFunction", module = "pyregulator", frozen)]
struct PyCircleFunction {
    inner: core::CircleFunction,
}

#[pymethods]
impl PyCircleFunction {
    #[new]
    fn new(samples: Vec<Complex64>) -> PyResult<Self> {
        let inner = core::CircleFunction::from_samples(samples).map_err(err)?;
        Ok(Self { inner })
    }

    /// `e^{ik theta}` on a grid of `grid` points.
    #[staticmethod]
    #[pyo3(signature = (k, grid = 4096))]
    fn mode(k: i64, grid: usize) -> PyResult<Self> {
        let inner = core::CircleFunction::mode(grid, k).map_err(err)?;
        Ok(Self { inner })
    }

    /// A rational function expression pulled back along a loop.
    #[staticmethod]
    #[pyo3(signature = (expr, r#loop = "circle(0,0,1)", grid = 4096))]
    fn compose(expr: &str, r#loop: &str, grid: usize) -> PyResult<Self> {
        let f = core::parse_rational(expr).map_err(err)?;
        let gamma = core::parse_loop(r#loop).map_err(err)?;
        let inner = core::compose(&f, &gamma, grid).map_err(err)?;
        Ok(Self { inner })
    }

    /// A symbol literal such as `exp(fourier(1:0.5,0))`.
    #[staticmethod]
    #[pyo3(signature = (expr, grid = 4096))]
    fn symbol(expr: &str, grid: usize) -> PyResult<Self> {
        let inner = core::parse_symbol(expr).and_then(|s| s.sample(grid)).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn grid(&self) -> usize {
        self.inner.grid_size()
    }

    fn samples(&self) -> Vec<Complex64> {
        self.inner.samples().to_vec()
    }

    fn coefficient(&self, k: i64) -> Complex64 {
        self.inner.coefficient(k)
    }

    fn winding_number(&self) -> PyResult<i64> {
        core::winding_number(&self.inner).map_err(err)
    }

    fn exp(&self) -> Self {
        Self { inner: self.inner.exp() }
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        let inner = self.inner.mul(&other.inner).map_err(err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.grid_size()
    }

    fn __repr__(&self) -> String {
        format!("CircleFunction(grid={})", self.inner.grid_size())
    }
}

#[pyfunction]
fn closed_form(p: &PyCircleFunction, q: &PyCircleFunction) -> PyResult<Complex64> {
    Ok(core::regulator_fourier(&p.inner, &q.inner).map_err(err)?.value)
}

#[pyfunction]
fn contour_integral(p: &PyCircleFunction, q: &PyCircleFunction) -> PyResult<Complex64> {
    Ok(core::regulator_integral(&p.inner, &q.inner).map_err(err)?.value)
}

/// Returns the value and the `(M, value)` convergence history.
#[pyfunction]
#[pyo3(signature = (p, q, dim_n = 512, trunc_m = 64))]
fn operator_determinant(
    p: &PyCircleFunction,
    q: &PyCircleFunction,
    dim_n: usize,
    trunc_m: usize,
) -> PyResult<(Complex64, Vec<(usize, Complex64)>)> {
    let d = core::steinberg_operator_determinant(&p.inner, &q.inner, dim_n, trunc_m).map_err(err)?;
    Ok((d.value, d.convergence_history))
}

#[pyfunction]
#[pyo3(signature = (alpha, beta, dim_n = 512, trunc_m = 64))]
fn commutator_determinant(
    alpha: &PyCircleFunction,
    beta: &PyCircleFunction,
    dim_n: usize,
    trunc_m: usize,
) -> PyResult<Complex64> {
    Ok(core::commutator_determinant(&alpha.inner, &beta.inner, dim_n, trunc_m)
        .map_err(err)?
        .value)
}

#[pyfunction]
fn helton_howe(alpha: &PyCircleFunction, beta: &PyCircleFunction) -> PyResult<Complex64> {
    core::helton_howe_value(&alpha.inner, &beta.inner).map_err(err)
}

/// Every method on `(f o loop, g o loop)` with cross-checks, as a dict.
#[pyfunction]
#[pyo3(signature = (f, g, r#loop = "circle(0,0,1)", grid = 4096, dim_n = 512, trunc_m = 64))]
fn pair<'py>(
    py: Python<'py>,
    f: &str,
    g: &str,
    r#loop: &str,
    grid: usize,
    dim_n: usize,
    trunc_m: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let config = config(grid, dim_n, trunc_m)?;
    let p = PyCircleFunction::compose(f, r#loop, grid)?;
    let q = PyCircleFunction::compose(g, r#loop, grid)?;
    let inputs = BTreeMap::from([
        ("f".to_string(), f.to_string()),
        ("g".to_string(), g.to_string()),
        ("loop".to_string(), r#loop.to_string()),
    ]);
    let report = harness::evaluate_pair(&p.inner, &q.inner, "pyregulator.pair".into(), inputs, &config);
    from_json(py, &report.to_json())
}

#[pyfunction]
fn tame_symbol(f: &str, g: &str, point: &str) -> PyResult<Complex64> {
    let f = core::parse_rational(f).map_err(err)?;
    let g = core::parse_rational(g).map_err(err)?;
    let x = core::parse_point(point).map_err(err)?;
    Ok(core::tame_symbol(&f, &g, x))
}

/// `(m(P), log|R{P o circle, z}|)`.
#[pyfunction]
#[pyo3(signature = (poly, grid = 4096))]
fn mahler_measure(poly: &str, grid: usize) -> PyResult<(f64, f64)> {
    let p = core::parse_rational(poly).map_err(err)?;
    let m = core::mahler_measure(&p, grid).map_err(err)?;
    Ok((m.value, m.regulator_log_abs))
}

#[pyfunction]
#[pyo3(signature = (seed = 0, grid = 4096, dim_n = 512, trunc_m = 64))]
fn selftest<'py>(
    py: Python<'py>,
    seed: u64,
    grid: usize,
    dim_n: usize,
    trunc_m: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let config = RunConfig {
        seed,
        ..config(grid, dim_n, trunc_m)?
    };
    let report = py
        .detach(|| harness::selftest(&config, "pyregulator.selftest".into()))
        .map_err(err)?;
    from_json(py, &report.to_json())
}

#[pymodule]
fn pyregulator(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircleFunction>()?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(contour_integral, m)?)?;
    m.add_function(wrap_pyfunction!(operator_determinant, m)?)?;
    m.add_function(wrap_pyfunction!(commutator_determinant, m)?)?;
    m.add_function(wrap_pyfunction!(helton_howe, m)?)?;
    m.add_function(wrap_pyfunction!(pair, m)?)?;
    m.add_function(wrap_pyfunction!(tame_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(mahler_measure, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}

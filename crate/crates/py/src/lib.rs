//! Python module `abelgas`: model parameters, scenarios, the Abel reduction,
//! closed-form solutions, the incomplete gamma function and the run harness.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use abelgas_core::abel::{self, SignConvention};
use abelgas_core::canonical::closed_form::{self, Case};
use abelgas_core::config::{self, IntegrationConstants, Route};
use abelgas_core::error::Error;
use abelgas_core::{ad_system, harness, special};

create_exception!(abelgas, AbelgasError, PyException);

fn err(e: Error) -> PyErr {
    match e {
        Error::Validation { .. } | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => AbelgasError::new_err(e.to_string()),
    }
}

fn convention(paper_literal: bool) -> SignConvention {
    if paper_literal {
        SignConvention::PaperLiteral
    } else {
        SignConvention::Derived
    }
}

/// Column names, grid and one row per grid point.
type Series = (Vec<String>, Vec<f64>, Vec<Vec<f64>>);

fn parse_routes(routes: Vec<String>) -> PyResult<Vec<Route>> {
    routes.iter().map(|r| r.parse::<Route>().map_err(err)).collect()
}

/// Model parameters; keyword arguments override the defaults.
#[pyclass(name = "ModelParams", module = "abelgas", from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: config::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut value = serde_json::to_value(config::default_params()).expect("params serialize");
        if let Some(kw) = overrides {
            let obj = value.as_object_mut().expect("params are an object");
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                let x: f64 = v.extract()?;
                obj.insert(key, serde_json::json!(x));
            }
        }
        let inner: config::ModelParams =
            serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PyModelParams { inner })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (name, v) in self.inner.named_values() {
            d.set_item(name, v)?;
        }
        Ok(d)
    }

    /// Names of parameters still at placeholder values.
    fn placeholders(&self) -> Vec<&'static str> {
        self.inner.placeholders_in_use()
    }

    /// Growth exponent m = μ1max·S1in/(S1in + K_S1) − αD.
    fn growth_exponent(&self) -> f64 {
        ad_system::washout_exponent(&self.inner)
    }

    fn __getattr__(&self, name: &str) -> PyResult<f64> {
        self.inner
            .named_values()
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| pyo3::exceptions::PyAttributeError::new_err(name.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("ModelParams({:?})", self.inner)
    }
}

#[pyclass(name = "Scenario", module = "abelgas", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: config::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: config::Scenario::from_json(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyScenario {
            inner: config::load_scenario(path).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn output_grid(&self) -> Vec<f64> {
        self.inner.output_grid()
    }

    #[getter]
    fn params(&self) -> PyModelParams {
        PyModelParams { inner: self.inner.params }
    }

    #[getter]
    fn routes(&self) -> Vec<&'static str> {
        self.inner.routes.iter().map(|r| r.label()).collect()
    }

    /// Runs one route; returns (column names, grid, rows).
    #[pyo3(signature = (route, paper_literal = false))]
    fn solve(&self, route: &str, paper_literal: bool) -> PyResult<Series> {
        let route: Route = route.parse().map_err(err)?;
        let run = harness::execute_route(&self.inner, route, convention(paper_literal)).map_err(err)?;
        let s = run.series;
        Ok((s.names, s.grid, s.values))
    }
}

/// Scalars of the Abel reduction for given parameters, X1(0) and Γ.
#[pyclass(name = "AbelConstants", module = "abelgas", frozen, from_py_object)]
#[derive(Clone)]
struct PyAbelConstants {
    k: abel::AbelConstants,
}

#[pymethods]
impl PyAbelConstants {
    #[new]
    #[pyo3(signature = (params, x1_0, gamma))]
    fn new(params: &PyModelParams, x1_0: f64, gamma: f64) -> PyResult<Self> {
        let ic = IntegrationConstants { c: 0.0, c0: 0.0, c1: 1.0, c2: 0.0, c3: 0.0 };
        let k = abel::derive_constants(&params.inner, x1_0, gamma, &ic).map_err(err)?;
        Ok(PyAbelConstants { k })
    }

    #[getter]
    fn m(&self) -> f64 {
        self.k.m
    }

    #[getter]
    fn a1(&self) -> f64 {
        self.k.a1
    }

    #[getter]
    fn a2(&self) -> f64 {
        self.k.a2
    }

    #[getter]
    fn a3(&self) -> f64 {
        self.k.a3
    }

    #[getter]
    fn a4(&self) -> f64 {
        self.k.a4
    }

    #[getter]
    fn a5(&self) -> f64 {
        self.k.a5
    }

    #[getter]
    fn b1(&self) -> f64 {
        self.k.b1
    }

    #[getter]
    fn b1_derived(&self) -> f64 {
        self.k.b1_derived
    }

    #[getter]
    fn cubic0(&self) -> f64 {
        self.k.cubic0
    }

    fn is_washout(&self) -> bool {
        self.k.is_washout()
    }

    #[pyo3(signature = (paper_literal = false))]
    fn shift(&self, paper_literal: bool) -> f64 {
        self.k.shift(convention(paper_literal))
    }

    /// Abel right-hand side in t.
    fn rhs_time(&self, t: f64, v: f64) -> f64 {
        abel::abel_rhs_time(t, v, &self.k)
    }

    /// Abel right-hand side in w = e^{mt}.
    fn rhs_w(&self, w: f64, v: f64) -> PyResult<f64> {
        abel::abel_rhs_w(w, v, &self.k).map_err(err)
    }

    /// Case 1 residual of both sign conventions, fitted to V(0) = v0.
    #[pyo3(signature = (v0, tol = 1e-7))]
    fn sign_audit<'py>(&self, py: Python<'py>, v0: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let a = closed_form::sign_audit(&self.k, v0, tol);
        let d = PyDict::new(py);
        d.set_item("derived_residual", a.derived_residual)?;
        d.set_item("paper_literal_residual", a.paper_literal_residual)?;
        d.set_item("forcing_defect", a.forcing_defect)?;
        d.set_item("passing", a.passing.iter().map(|c| c.label()).collect::<Vec<_>>())?;
        d.set_item("notes", a.notes)?;
        Ok(d)
    }
}

/// Closed-form washout solution with constants fitted to V(0) = v0.
#[pyclass(name = "ClosedForm", module = "abelgas", frozen)]
struct PyClosedForm {
    sol: closed_form::ClosedFormSolution,
}

#[pymethods]
impl PyClosedForm {
    #[staticmethod]
    #[pyo3(signature = (k, v0, paper_literal = false))]
    fn case1(k: &PyAbelConstants, v0: f64, paper_literal: bool) -> PyResult<Self> {
        Self::fit(k, Case::Case1, v0, 0.0, paper_literal)
    }

    #[staticmethod]
    #[pyo3(signature = (k, v0, c0 = 0.1, paper_literal = false))]
    fn case2(k: &PyAbelConstants, v0: f64, c0: f64, paper_literal: bool) -> PyResult<Self> {
        Self::fit(k, Case::Case2, v0, c0, paper_literal)
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        self.sol.domain
    }

    /// (C, C0, C1, C2, C3)
    #[getter]
    fn constants(&self) -> (f64, f64, f64, f64, f64) {
        let c = self.sol.constants;
        (c.c, c.c0, c.c1, c.c2, c.c3)
    }

    fn v(&self, t: f64) -> PyResult<f64> {
        self.sol.v_of_t(t).map_err(err)
    }

    fn s1(&self, t: f64) -> PyResult<f64> {
        self.sol.s1_of_t(t).map_err(err)
    }

    /// Max relative residual against the Abel equation over `grid`.
    fn residual(&self, grid: Vec<f64>) -> PyResult<f64> {
        closed_form::verify_residual(&self.sol, &self.sol.abel, &grid).map_err(err)
    }
}

impl PyClosedForm {
    fn fit(k: &PyAbelConstants, case: Case, v0: f64, c0: f64, paper_literal: bool) -> PyResult<Self> {
        let conv = convention(paper_literal);
        let k0 = &k.k;
        let ic = closed_form::fit_integration_constants(k0, case, conv, v0, c0).map_err(err)?;
        let k1 = abel::derive_constants(&k0.params, k0.x1_0, k0.gamma, &ic).map_err(err)?;
        let sol = match case {
            Case::Case1 => closed_form::case1_solution(&k1, &ic, conv),
            Case::Case2 => closed_form::case2_solution(&k1, &ic, conv),
        }
        .map_err(err)?;
        Ok(PyClosedForm { sol })
    }
}

#[pyfunction]
fn substrate_to_v(s1: f64, k_s1: f64) -> PyResult<f64> {
    abel::substrate_to_v(s1, k_s1).map_err(err)
}

#[pyfunction]
fn v_to_substrate(v: f64, k_s1: f64) -> PyResult<f64> {
    abel::v_to_substrate(v, k_s1).map_err(err)
}

/// Upper incomplete gamma Γ(s, x) for real s and x ≥ 0.
#[pyfunction]
fn upper_incomplete_gamma(s: f64, x: f64) -> PyResult<f64> {
    special::upper_incomplete_gamma(s, x).map_err(err)
}

/// Right-hand side of the seven-state model at `state` (x1, x2, s1, s2, a, c, f_m).
#[pyfunction]
fn rhs_full(state: [f64; 7], params: &PyModelParams) -> PyResult<[f64; 7]> {
    let s = config::AdState::from_slice(&state);
    Ok(ad_system::rhs_full(&s, &params.inner).map_err(err)?.to_array())
}

/// Same as the `abelgas run` command; returns the exit code.
#[pyfunction]
#[pyo3(signature = (scenario, outdir, routes = None, compare = false, tol_cross = harness::DEFAULT_TOL_CROSS, paper_literal_signs = false))]
fn run(
    scenario: PathBuf,
    outdir: PathBuf,
    routes: Option<Vec<String>>,
    compare: bool,
    tol_cross: f64,
    paper_literal_signs: bool,
) -> PyResult<i32> {
    let flags = harness::RunFlags {
        routes: routes.map(parse_routes).transpose()?,
        compare,
        tol_cross,
        paper_literal_signs,
    };
    Ok(harness::run(&scenario, &outdir, &flags).exit_code)
}

#[pymodule]
fn abelgas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AbelgasError", m.py().get_type::<AbelgasError>())?;
    m.add("ROUTES", Route::ALL.iter().map(|r| r.label()).collect::<Vec<_>>())?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyAbelConstants>()?;
    m.add_class::<PyClosedForm>()?;
    m.add_function(wrap_pyfunction!(substrate_to_v, m)?)?;
    m.add_function(wrap_pyfunction!(v_to_substrate, m)?)?;
    m.add_function(wrap_pyfunction!(upper_incomplete_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(rhs_full, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

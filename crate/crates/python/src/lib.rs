//! Python bindings for the `cavity-mf` simulator.
//!
//! Parameters, states and fixed points are exposed as classes; composite
//! results (sweeps, region reports, fits) come back as plain dicts and lists.

#![allow(clippy::wrong_self_convention)]

use cavity_mf::asymptotics;
use cavity_mf::dynamics::{integrate_with, IntegrateOptions};
use cavity_mf::regions::{region_boundaries, RegionAxis, RegionOptions};
use cavity_mf::stability::{find_limit_cycle, hopf_scan, spectrum};
use cavity_mf::steady::{self, CriticalParam, SweepOptions};
use cavity_mf::{cli, model, Error};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    if cli::exit_code(&e) == 3 {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Converts any serializable result into the equivalent Python object.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "EffectiveParams", module = "cavity_mf_py", from_py_object)]
#[derive(Clone, Copy)]
pub struct PyEffectiveParams {
    inner: model::EffectiveParams,
}

#[pymethods]
impl PyEffectiveParams {
    #[new]
    #[pyo3(signature = (*, delta_at=0.0, delta_ph=0.0, lambda_=0.0, g_tilde=0.0, kappa=0.0, gamma=0.0, eta=Complex64::new(0.0, 0.0), n_spins=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        delta_at: f64,
        delta_ph: f64,
        lambda_: f64,
        g_tilde: f64,
        kappa: f64,
        gamma: f64,
        eta: Complex64,
        n_spins: f64,
    ) -> PyResult<Self> {
        let inner = model::EffectiveParams {
            delta_at,
            delta_ph,
            lambda: lambda_,
            g_tilde,
            kappa,
            gamma,
            eta_r: eta.re,
            eta_i: eta.im,
            n_spins,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Effective constants from the three-level-atom frequencies.
    #[staticmethod]
    #[pyo3(signature = (g, omega_rabi, delta_e, delta_s, delta_cavity, *, kappa=0.0, gamma=0.0, eta=Complex64::new(0.0, 0.0), n_spins=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn from_physical(
        g: f64,
        omega_rabi: f64,
        delta_e: f64,
        delta_s: f64,
        delta_cavity: f64,
        kappa: f64,
        gamma: f64,
        eta: Complex64,
        n_spins: f64,
    ) -> PyResult<Self> {
        let phys = model::PhysicalParams {
            g,
            omega_rabi,
            delta_e,
            delta_s,
            delta_cavity,
            omega_aux: 0.0,
        };
        let inner = model::derive_effective_params(&phys, kappa, gamma, eta, n_spins).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn delta_at(&self) -> f64 {
        self.inner.delta_at
    }
    #[getter]
    fn delta_ph(&self) -> f64 {
        self.inner.delta_ph
    }
    #[getter(lambda_)]
    fn lambda(&self) -> f64 {
        self.inner.lambda
    }
    #[getter]
    fn g_tilde(&self) -> f64 {
        self.inner.g_tilde
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn eta(&self) -> Complex64 {
        self.inner.eta()
    }
    #[getter]
    fn n_spins(&self) -> f64 {
        self.inner.n_spins
    }

    /// Copy with a different coupling.
    fn with_g_tilde(&self, g_tilde: f64) -> Self {
        Self {
            inner: self.inner.with_g_tilde(g_tilde),
        }
    }

    fn with_lambda(&self, lambda_: f64) -> Self {
        Self {
            inner: self.inner.with_lambda(lambda_),
        }
    }

    fn with_delta_at(&self, delta_at: f64) -> Self {
        Self {
            inner: self.inner.with_delta_at(delta_at),
        }
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "MFState", module = "cavity_mf_py", from_py_object)]
#[derive(Clone, Copy)]
pub struct PyMFState {
    inner: cavity_mf::MFState,
}

#[pymethods]
impl PyMFState {
    #[new]
    fn new(alpha_r: f64, alpha_i: f64, s_x: f64, s_y: f64, w: f64) -> Self {
        Self {
            inner: cavity_mf::MFState::new(alpha_r, alpha_i, s_x, s_y, w),
        }
    }

    #[getter]
    fn alpha(&self) -> Complex64 {
        Complex64::new(self.inner.alpha_r, self.inner.alpha_i)
    }
    #[getter]
    fn s_x(&self) -> f64 {
        self.inner.s_x
    }
    #[getter]
    fn s_y(&self) -> f64 {
        self.inner.s_y
    }
    #[getter]
    fn w(&self) -> f64 {
        self.inner.w
    }

    /// `s_x^2 + s_y^2 + w^2`.
    fn spin_norm(&self) -> f64 {
        cavity_mf::spin_norm(&self.inner)
    }

    fn to_list(&self) -> Vec<f64> {
        self.inner.to_array().to_vec()
    }

    fn __repr__(&self) -> String {
        let x = &self.inner;
        format!("MFState({}, {}, {}, {}, {})", x.alpha_r, x.alpha_i, x.s_x, x.s_y, x.w)
    }
}

#[pyclass(name = "SteadyBranch", module = "cavity_mf_py", get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PySteadyBranch {
    state: PyMFState,
    branch: String,
    g_tilde: f64,
    residual: f64,
    stability: String,
}

#[pymethods]
impl PySteadyBranch {
    fn __repr__(&self) -> String {
        format!(
            "SteadyBranch({}, g_tilde={}, w={}, {})",
            self.branch, self.g_tilde, self.state.inner.w, self.stability
        )
    }
}

impl From<&steady::SteadyBranch> for PySteadyBranch {
    fn from(b: &steady::SteadyBranch) -> Self {
        Self {
            state: PyMFState { inner: b.state },
            branch: b.branch.label(),
            g_tilde: b.g_tilde,
            residual: b.residual,
            stability: b.stability.label().to_string(),
        }
    }
}

#[pyclass(name = "Params2D", module = "cavity_mf_py", from_py_object)]
#[derive(Clone, Copy)]
pub struct PyParams2D {
    inner: model::Params2D,
}

#[pymethods]
impl PyParams2D {
    #[new]
    #[pyo3(signature = (*, n_rows, n_cols, g_tilde_a=0.0, g_tilde_b=0.0, delta_ph_a=0.0, delta_ph_b=0.0, delta_at=0.0, lambda_=0.0, kappa=0.0, gamma=0.0, eta=Complex64::new(0.0, 0.0)))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_rows: usize,
        n_cols: usize,
        g_tilde_a: f64,
        g_tilde_b: f64,
        delta_ph_a: f64,
        delta_ph_b: f64,
        delta_at: f64,
        lambda_: f64,
        kappa: f64,
        gamma: f64,
        eta: Complex64,
    ) -> PyResult<Self> {
        let inner = model::Params2D {
            g_tilde_a,
            g_tilde_b,
            delta_ph_a,
            delta_ph_b,
            delta_at,
            lambda: lambda_,
            kappa,
            gamma,
            eta,
            n_rows,
            n_cols,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }
}

/// Time derivative of the single-cavity mean-field state.
#[pyfunction]
fn rhs(state: PyMFState, p: PyEffectiveParams) -> PyMFState {
    PyMFState {
        inner: cavity_mf::rhs_1d(&state.inner, &p.inner),
    }
}

/// Analytic 5x5 Jacobian, row-major.
#[pyfunction]
fn jacobian(state: PyMFState, p: PyEffectiveParams) -> Vec<Vec<f64>> {
    let m = cavity_mf::jacobian(&state.inner, &p.inner);
    (0..5).map(|i| (0..5).map(|j| m[(i, j)]).collect()).collect()
}

/// Returns `(times, states)` with each state as `[alpha_r, alpha_i, s_x, s_y, w]`.
#[pyfunction]
#[pyo3(signature = (state, p, t_end, *, rel_tol=None, abs_tol=None, n_samples=512))]
fn integrate(
    py: Python<'_>,
    state: PyMFState,
    p: PyEffectiveParams,
    t_end: f64,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    n_samples: usize,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = IntegrateOptions::default();
    let opts = IntegrateOptions::with_tolerances(rel_tol.unwrap_or(d.rel_tol), abs_tol.unwrap_or(d.abs_tol))
        .samples(n_samples);
    let traj = py
        .detach(|| integrate_with(&state.inner, &p.inner, t_end, &opts))
        .map_err(py_err)?;
    Ok((traj.times, traj.states.iter().map(|s| s.to_array().to_vec()).collect()))
}

/// Every fixed point at the coupling in `p`, classified.
#[pyfunction]
fn steady_branches(p: PyEffectiveParams) -> PyResult<Vec<PySteadyBranch>> {
    Ok(steady::steady_branches(&p.inner)
        .map_err(py_err)?
        .iter()
        .map(PySteadyBranch::from)
        .collect())
}

/// `(g1_star, g2_star)`; `g2_star` is `None` where it is not defined.
#[pyfunction]
fn transition_points(p: PyEffectiveParams) -> PyResult<(f64, Option<f64>)> {
    let t = steady::transition_points(&p.inner).map_err(py_err)?;
    Ok((t.g1_star, t.g2_star))
}

/// Jacobian eigenvalues at `state`, or `None` if the eigen-solve failed.
#[pyfunction]
fn eigenvalues(state: PyMFState, p: PyEffectiveParams) -> Option<Vec<Complex64>> {
    spectrum(&state.inner, &p.inner).map(|s| s.eigenvalues.to_vec())
}

/// Stability label of a state treated as a fixed point.
#[pyfunction]
fn classify(state: PyMFState, p: PyEffectiveParams) -> String {
    cavity_mf::stability::classify_state(&state.inner, &p.inner)
        .0
        .label()
        .to_string()
}

/// Continuation sweep as a dict with `points`, `tracks` and `events`.
#[pyfunction]
#[pyo3(signature = (p, g_lo, g_hi, steps, *, jobs=None))]
fn sweep<'py>(
    py: Python<'py>,
    p: PyEffectiveParams,
    g_lo: f64,
    g_hi: f64,
    steps: usize,
    jobs: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| steady::continuation_sweep(&p.inner, g_lo, g_hi, steps, &SweepOptions { jobs }))
        .map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (p, g_lo, g_hi, steps, *, jobs=None))]
fn hopf_points<'py>(
    py: Python<'py>,
    p: PyEffectiveParams,
    g_lo: f64,
    g_hi: f64,
    steps: usize,
    jobs: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| hopf_scan(&p.inner, g_lo, g_hi, steps, &SweepOptions { jobs }))
        .map_err(py_err)?;
    to_py(py, &r)
}

/// Limit cycle reached from `state`, or `None` if the motion settles.
#[pyfunction]
fn limit_cycle<'py>(
    py: Python<'py>,
    p: PyEffectiveParams,
    state: PyMFState,
    t_transient: f64,
    t_measure: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| find_limit_cycle(&p.inner, &state.inner, t_transient, t_measure))
        .map_err(py_err)?;
    to_py(py, &r)
}

/// Region boundaries along `axis` ("lambda" or "delta_at").
#[pyfunction]
#[pyo3(signature = (p, axis, values, *, g_lo=0.0, g_hi=4.0, steps=200, hopf=false, jobs=None))]
#[allow(clippy::too_many_arguments)]
fn regions<'py>(
    py: Python<'py>,
    p: PyEffectiveParams,
    axis: &str,
    values: Vec<f64>,
    g_lo: f64,
    g_hi: f64,
    steps: usize,
    hopf: bool,
    jobs: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let axis = RegionAxis::parse(axis).ok_or_else(|| PyValueError::new_err(format!("unknown axis {axis:?}")))?;
    let opts = RegionOptions {
        g_lo,
        g_hi,
        steps,
        hopf,
    };
    let r = py
        .detach(|| region_boundaries(&p.inner, axis, &values, &opts, &SweepOptions { jobs }))
        .map_err(py_err)?;
    to_py(py, &r)
}

/// Exact solutions next to the large-lambda expansion at each coupling.
#[pyfunction]
fn scaling_table<'py>(py: Python<'py>, p: PyEffectiveParams, g_values: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let r = asymptotics::scaling_table(&p.inner, &g_values).map_err(py_err)?;
    to_py(py, &r)
}

/// Fits `|w| = A |g - g1|^beta` to `(g, w)` samples.
#[pyfunction]
fn fit_critical_exponent<'py>(py: Python<'py>, samples: Vec<(f64, f64)>, g1: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = asymptotics::fit_critical_exponent(&samples, g1).map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (p, critical_param="g_tilde_a"))]
fn homogeneous_2d<'py>(py: Python<'py>, p: PyParams2D, critical_param: &str) -> PyResult<Bound<'py, PyAny>> {
    let which = match critical_param {
        "g_tilde_a" => CriticalParam::GTildeA,
        "g_tilde_b" => CriticalParam::GTildeB,
        other => return Err(PyValueError::new_err(format!("unknown critical parameter {other:?}"))),
    };
    let r = steady::homogeneous_2d(&p.inner, which).map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (p, n_random=64, seed=0))]
fn cluster_2d<'py>(py: Python<'py>, p: PyParams2D, n_random: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| steady::cluster_2d(&p.inner, n_random, seed))
        .map_err(py_err)?;
    to_py(py, &r)
}

#[pymodule]
pub fn cavity_mf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEffectiveParams>()?;
    m.add_class::<PyMFState>()?;
    m.add_class::<PySteadyBranch>()?;
    m.add_class::<PyParams2D>()?;
    m.add_function(wrap_pyfunction!(rhs, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(steady_branches, m)?)?;
    m.add_function(wrap_pyfunction!(transition_points, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_points, m)?)?;
    m.add_function(wrap_pyfunction!(limit_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(regions, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_table, m)?)?;
    m.add_function(wrap_pyfunction!(fit_critical_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_2d, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_2d, m)?)?;
    Ok(())
}

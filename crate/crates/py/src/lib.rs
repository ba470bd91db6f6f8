//! Python bindings: metric states and parameters, the metric operators,
//! position-space eigenfunctions and the scenario runner.

use num_complex::Complex64 as C64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use std::collections::BTreeMap;
use tdph::fock::{build_operator_set, Operator};
use tdph::metric::{self, MetricBuilder};
use tdph::position::{self, GaussianShape, PositionGrid, Regime, Weight};
use tdph::runner;
use tdph::swanson::{self, FreeParameters, HamiltonianCoefficients, InvariantCoefficients};

create_exception!(tdph_py, TdphError, PyException);

fn err(e: tdph::Error) -> PyErr {
    TdphError::new_err(e.to_string())
}

type Matrix = Vec<Vec<C64>>;

fn rows(a: &Operator) -> Matrix {
    a.as_array().outer_iter().map(|r| r.to_vec()).collect()
}

/// Metric state `(Phi, vtheta0)` with `chi = Phi^2 - vtheta0`.
#[pyclass(frozen, skip_from_py_object, module = "tdph_py")]
#[derive(Clone, Copy)]
pub struct MetricState(swanson::MetricState);

#[pymethods]
impl MetricState {
    #[new]
    fn new(phi_cap: f64, vtheta_zero: f64) -> PyResult<Self> {
        swanson::MetricState::new(phi_cap, vtheta_zero).map(Self).map_err(err)
    }

    #[getter]
    fn phi_cap(&self) -> f64 {
        self.0.phi_cap
    }

    #[getter]
    fn vtheta_zero(&self) -> f64 {
        self.0.vtheta_zero
    }

    #[getter]
    fn chi(&self) -> f64 {
        self.0.chi()
    }

    fn squeeze_ratio(&self) -> f64 {
        self.0.squeeze_ratio()
    }

    fn is_normalizable(&self) -> bool {
        self.0.is_normalizable()
    }

    fn constraint_denominator(&self) -> f64 {
        self.0.constraint_denominator()
    }

    fn regime(&self) -> &'static str {
        Regime::of(&self.0).name()
    }

    /// `(delta1, delta2, delta3)` of the pseudo-Hermitian invariant.
    fn invariant_coefficients(&self) -> (f64, f64, f64) {
        let c = InvariantCoefficients::from_state(&self.0);
        (c.delta1, c.delta2, c.delta3)
    }

    fn normalization(&self) -> f64 {
        InvariantCoefficients::from_state(&self.0).normalization(&self.0)
    }

    fn gauss(&self) -> PyResult<GaussParams> {
        self.0.gauss().map(GaussParams).map_err(err)
    }

    /// `(omega, alpha, beta)` completing the free parameters.
    fn constrained_coefficients(&self, re_omega: f64, im_omega: f64, im_beta: f64) -> PyResult<(C64, C64, C64)> {
        let c = swanson::derive_constrained_coeffs(&self.0, &FreeParameters { re_omega, im_omega, im_beta })
            .map_err(err)?;
        Ok((c.omega, c.alpha, c.beta))
    }

    /// Absolute values of the three real-part constraint relations.
    fn relation_residuals(&self, omega: C64, alpha: C64, beta: C64) -> [f64; 3] {
        swanson::relation_residuals(&self.0, &HamiltonianCoefficients::new(omega, alpha, beta)).map(f64::abs)
    }

    fn __repr__(&self) -> String {
        format!("MetricState(phi_cap={}, vtheta_zero={})", self.0.phi_cap, self.0.vtheta_zero)
    }
}

/// Normal-ordered parameters of `rho = exp(v+ K+) v0^K0 exp(v- K-)`.
#[pyclass(frozen, skip_from_py_object, module = "tdph_py")]
#[derive(Clone, Copy)]
pub struct GaussParams(metric::GaussParams);

#[pymethods]
impl GaussParams {
    /// Parameters of `exp(2 eps K0 + 2 mu K- + 2 mu K+)`.
    #[staticmethod]
    fn from_generator(epsilon: f64, mu: f64) -> PyResult<Self> {
        metric::gauss_params(epsilon, mu).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_metric(phi_cap: f64, vtheta_zero: f64) -> PyResult<Self> {
        metric::GaussParams::from_metric(phi_cap, vtheta_zero).map(Self).map_err(err)
    }

    #[getter]
    fn vtheta_plus(&self) -> f64 {
        self.0.vtheta_plus
    }

    #[getter]
    fn vtheta_zero(&self) -> f64 {
        self.0.vtheta_zero
    }

    #[getter]
    fn vtheta_minus(&self) -> f64 {
        self.0.vtheta_minus
    }

    #[getter]
    fn chi(&self) -> f64 {
        self.0.chi
    }

    #[getter]
    fn phi_cap(&self) -> f64 {
        self.0.phi_cap
    }

    fn normalization_residual(&self) -> f64 {
        self.0.normalization_residual()
    }

    fn __repr__(&self) -> String {
        let g = &self.0;
        format!("GaussParams(vtheta_plus={}, vtheta_zero={}, vtheta_minus={})", g.vtheta_plus, g.vtheta_zero, g.vtheta_minus)
    }
}

#[pyfunction]
fn invert_gauss_params(phi_cap: f64, vtheta_zero: f64) -> PyResult<(f64, f64)> {
    metric::invert_gauss_params(phi_cap, vtheta_zero).map_err(err)
}

/// `rho` on `dim` Fock levels, as rows of complex numbers.
#[pyfunction]
fn rho(g: &GaussParams, dim: usize) -> PyResult<Matrix> {
    metric::build_rho(&g.0, dim).map(|a| rows(&a)).map_err(err)
}

/// Exact matrix elements of `rho^-1`.
#[pyfunction]
fn rho_inverse(g: &GaussParams, dim: usize) -> PyResult<Matrix> {
    let b = MetricBuilder::new(dim).map_err(err)?;
    b.rho_inverse_projected(&g.0).map(|a| rows(&a)).map_err(err)
}

/// Exact matrix elements of `eta = rho^2`.
#[pyfunction]
fn eta(g: &GaussParams, dim: usize) -> PyResult<Matrix> {
    let b = MetricBuilder::new(dim).map_err(err)?;
    b.eta_projected(&g.0).map(|a| rows(&a)).map_err(err)
}

#[pyfunction]
fn hamiltonian(omega: C64, alpha: C64, beta: C64, dim: usize) -> PyResult<Matrix> {
    let ops = build_operator_set(dim).map_err(err)?;
    Ok(rows(&swanson::hamiltonian_matrix(&HamiltonianCoefficients::new(omega, alpha, beta), &ops)))
}

#[pyfunction]
fn invariant(s: &MetricState, dim: usize) -> PyResult<Matrix> {
    let ops = build_operator_set(dim).map_err(err)?;
    Ok(rows(&swanson::invariant_ph(&s.0, &ops)))
}

#[pyfunction]
fn hermite(n: usize, y: f64) -> PyResult<f64> {
    position::hermite(n, y).map_err(err)
}

/// `phi_n(x)` of the position representation.
#[pyfunction]
fn eigenfunction(n: usize, x: f64, s: &MetricState) -> PyResult<C64> {
    position::eigenfunction(n, x, &s.0).map_err(err)
}

/// Largest deviation of the weighted Gram matrix from the identity.
#[pyfunction]
fn gram_deviation(n_max: usize, s: &MetricState) -> PyResult<f64> {
    let shape = GaussianShape::from_state(&s.0).map_err(err)?;
    let grid = PositionGrid::for_shape(&shape, n_max).map_err(err)?;
    position::orthonormality_matrix(n_max, &s.0, &grid, Weight::Eta).map(|g| g.max_deviation()).map_err(err)
}

#[pyfunction]
fn cross_representation_modulus(n: usize, s: &MetricState) -> f64 {
    position::cross_representation_modulus(n, &s.0)
}

#[pyfunction]
fn demo_names() -> Vec<&'static str> {
    runner::demo_scenarios().into_iter().map(|(n, _)| n).collect()
}

/// Effective JSON config of a demo scenario.
#[pyfunction]
fn demo_config(name: &str) -> PyResult<String> {
    runner::demo_scenarios()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, cfg)| cfg.canonical_json())
        .ok_or_else(|| TdphError::new_err(format!("unknown demo scenario '{name}'")))
}

/// Runs a scenario given as JSON text; returns `(csv, report_json)`.
#[pyfunction]
fn run_scenario(py: Python<'_>, config_json: &str) -> PyResult<(String, String)> {
    let cfg = runner::parse_scenario(config_json).map_err(err)?;
    let out = py.detach(|| runner::run_scenario(&cfg)).map_err(err)?;
    Ok((out.csv, out.report.to_json()))
}

/// Re-checks a saved run; returns `(overall_pass, [(name, max_residual, tolerance, pass)])`.
#[pyfunction]
#[pyo3(signature = (csv, report_json, tolerances = None))]
#[allow(clippy::type_complexity)]
fn verify(
    csv: &str,
    report_json: &str,
    tolerances: Option<BTreeMap<String, f64>>,
) -> PyResult<(bool, Vec<(String, Option<f64>, f64, bool)>)> {
    let out = runner::verify(csv, report_json, &tolerances.unwrap_or_default(), None).map_err(err)?;
    let checks = out.checks.into_iter().map(|c| (c.name, c.max_residual, c.tolerance, c.pass)).collect();
    Ok((out.overall_pass, checks))
}

#[pymodule]
fn tdph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TdphError", m.py().get_type::<TdphError>())?;
    m.add("__version__", runner::VERSION)?;
    m.add_class::<MetricState>()?;
    m.add_class::<GaussParams>()?;
    m.add_function(wrap_pyfunction!(invert_gauss_params, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(rho_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(invariant, m)?)?;
    m.add_function(wrap_pyfunction!(hermite, m)?)?;
    m.add_function(wrap_pyfunction!(eigenfunction, m)?)?;
    m.add_function(wrap_pyfunction!(gram_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(cross_representation_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(demo_names, m)?)?;
    m.add_function(wrap_pyfunction!(demo_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

//! Python bindings for `lopost`.
//!
//! Kets cross the boundary as strings such as `"|H>1|2V>b"`; amplitudes as
//! Python complex numbers. Angles are radians except in circuit files.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lopost::analysis;
use lopost::circuit::{self, W4Variant};
use lopost::format;
use lopost::postselect::{self, CoincidencePattern};
use lopost::state::{self, Convention, Occupation};
use lopost::verify;

fn to_py(e: lopost::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_ket(s: &str) -> PyResult<Occupation> {
    s.parse().map_err(PyValueError::new_err)
}

fn parse_convention(s: &str) -> PyResult<Convention> {
    match s {
        "fock" => Ok(Convention::Fock),
        "monomial" => Ok(Convention::Monomial),
        other => Err(PyValueError::new_err(format!(
            "convention must be 'fock' or 'monomial', got {other:?}"
        ))),
    }
}

/// Sparse superposition of polarized Fock terms.
#[pyclass(name = "StateVector", module = "lopost", from_py_object)]
#[derive(Clone)]
pub struct PyStateVector {
    inner: state::StateVector,
}

impl From<state::StateVector> for PyStateVector {
    fn from(inner: state::StateVector) -> Self {
        PyStateVector { inner }
    }
}

#[pymethods]
impl PyStateVector {
    #[new]
    #[pyo3(signature = (terms, convention = "fock"))]
    fn new(terms: BTreeMap<String, Complex64>, convention: &str) -> PyResult<Self> {
        let conv = parse_convention(convention)?;
        let parsed = terms
            .iter()
            .map(|(k, a)| Ok((parse_ket(k)?, *a)))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(state::StateVector::from_terms(conv, parsed).into())
    }

    #[getter]
    fn convention(&self) -> String {
        self.inner.convention().to_string()
    }

    /// Terms keyed by canonical ket string.
    fn terms(&self) -> BTreeMap<String, Complex64> {
        self.inner.terms().map(|(o, a)| (o.to_string(), *a)).collect()
    }

    fn coefficient(&self, ket: &str) -> PyResult<Complex64> {
        Ok(self.inner.coefficient(&parse_ket(ket)?))
    }

    fn norm(&self) -> PyResult<f64> {
        state::norm(&self.inner).map_err(to_py)
    }

    fn inner_product(&self, other: &PyStateVector) -> PyResult<Complex64> {
        state::inner_product(&self.inner, &other.inner).map_err(to_py)
    }

    fn tensor(&self, other: &PyStateVector) -> PyResult<PyStateVector> {
        Ok(state::tensor(&self.inner, &other.inner).map_err(to_py)?.into())
    }

    fn to_fock(&self) -> PyStateVector {
        self.inner.to_fock().into()
    }

    fn to_monomial(&self) -> PyStateVector {
        self.inner.to_monomial().into()
    }

    fn photon_numbers(&self) -> Vec<u32> {
        self.inner.photon_numbers().into_iter().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &PyStateVector) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let terms: Vec<String> = self
            .inner
            .terms()
            .map(|(o, a)| format!("({:+.6}{:+.6}j){o}", a.re, a.im))
            .collect();
        format!("StateVector[{}]({})", self.inner.convention(), terms.join(" "))
    }
}

/// A validated optical circuit.
#[pyclass(name = "Circuit", module = "lopost", from_py_object)]
#[derive(Clone)]
pub struct PyCircuit {
    inner: circuit::Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Parses a JSON circuit description.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyCircuit {
            inner: format::parse_circuit(text).map_err(to_py)?,
        })
    }

    /// The four-photon W-state setup; `polarizer` adds a horizontal polarizer
    /// in front of detector 1.
    #[staticmethod]
    #[pyo3(signature = (theta, polarizer = false))]
    fn w4(theta: f64, polarizer: bool) -> PyResult<Self> {
        let variant = if polarizer {
            W4Variant::PolarizerD1
        } else {
            W4Variant::Plain
        };
        Ok(PyCircuit {
            inner: circuit::build_w4_circuit(theta, variant).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        format::serialize_circuit(&self.inner)
    }

    #[getter]
    fn modes(&self) -> Vec<String> {
        self.inner.modes().to_vec()
    }

    #[getter]
    fn tap_names(&self) -> Vec<String> {
        self.inner.tap_names().into_iter().map(String::from).collect()
    }

    #[getter]
    fn element_kinds(&self) -> Vec<&'static str> {
        self.inner.elements().iter().map(|e| e.kind()).collect()
    }

    /// Detectors and required count of the coincidence pattern, if any.
    #[getter]
    fn postselect(&self) -> Option<(Vec<String>, u32)> {
        self.inner
            .postselect()
            .map(|p| (p.detectors().to_vec(), p.required_count()))
    }

    fn input_state(&self) -> PyStateVector {
        self.inner.input_state().into()
    }

    /// Runs `input` (default: the circuit's own input). Returns the final
    /// Fock state and a dict of tap snapshots.
    #[pyo3(signature = (input = None))]
    fn run(&self, input: Option<&PyStateVector>) -> PyResult<(PyStateVector, BTreeMap<String, PyStateVector>)> {
        let input = input.map_or_else(|| self.inner.input_state(), |s| s.inner.clone());
        let out = circuit::run_circuit(&self.inner, &input).map_err(to_py)?;
        let taps = out.taps.into_iter().map(|(n, s)| (n, s.into())).collect();
        Ok((out.final_state.into(), taps))
    }

    fn __eq__(&self, other: &PyCircuit) -> bool {
        self.inner == other.inner
    }
}

/// Projects a normalized state onto `count` photons in each detector.
/// Returns `(probability, conditional_state)`. With `lossy`, sub-normalized
/// input (after a polarizer) is accepted.
#[pyfunction]
#[pyo3(signature = (state, detectors, count = 1, lossy = false))]
fn project(state: &PyStateVector, detectors: Vec<String>, count: u32, lossy: bool) -> PyResult<(f64, PyStateVector)> {
    let pattern = CoincidencePattern::new(detectors, count).map_err(to_py)?;
    let proj = if lossy {
        postselect::project_after_filter(&state.inner, &pattern)
    } else {
        postselect::coincidence_project(&state.inner, &pattern)
    }
    .map_err(to_py)?;
    Ok((proj.probability, proj.conditional.into()))
}

#[pyfunction]
fn w_state(n: usize, modes: Vec<String>) -> PyResult<PyStateVector> {
    let modes: Vec<&str> = modes.iter().map(String::as_str).collect();
    Ok(postselect::w_state(n, &modes).map_err(to_py)?.into())
}

#[pyfunction]
fn fidelity(state: &PyStateVector, target: &PyStateVector) -> PyResult<f64> {
    postselect::fidelity(&state.inner, &target.inner).map_err(to_py)
}

#[pyfunction]
fn w4_input_state() -> PyStateVector {
    circuit::w4_input_state().into()
}

#[pyfunction]
fn success_probability(theta: f64) -> PyResult<f64> {
    analysis::success_probability(theta).map_err(to_py)
}

/// `(theta, probability, closed_form, deviation, fidelity)`
type SweepRow = (f64, f64, f64, f64, f64);

/// `(id, name, measured, threshold, pass)`
type CheckRow = (String, String, f64, f64, bool);

/// One row per grid angle.
#[pyfunction]
fn sweep(theta_min: f64, theta_max: f64, steps: usize) -> PyResult<Vec<SweepRow>> {
    Ok(analysis::sweep_theta(theta_min, theta_max, steps)
        .map_err(to_py)?
        .into_iter()
        .map(|r| (r.theta, r.probability, r.closed_form, r.deviation, r.fidelity))
        .collect())
}

/// `(theta, probability)` at the maximum success probability.
#[pyfunction]
#[pyo3(signature = (tol = 1e-6))]
fn maximize(tol: f64) -> PyResult<(f64, f64)> {
    let opt = analysis::maximize_success(tol).map_err(to_py)?;
    Ok((opt.theta, opt.probability))
}

/// Runs the acceptance checks.
#[pyfunction]
#[pyo3(signature = (tol = verify::DEFAULT_TOL))]
fn run_verification(tol: f64) -> PyResult<Vec<CheckRow>> {
    Ok(verify::run_verification(tol)
        .map_err(to_py)?
        .checks
        .into_iter()
        .map(|c| (c.id.to_string(), c.name.to_string(), c.measured, c.threshold, c.pass))
        .collect())
}

#[pymodule]
#[pyo3(name = "lopost")]
pub fn lopost_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStateVector>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(w_state, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(w4_input_state, m)?)?;
    m.add_function(wrap_pyfunction!(success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    m.add_function(wrap_pyfunction!(run_verification, m)?)?;
    Ok(())
}

//! Python bindings for `qlc0-core`.
//!
//! Operators cross the boundary as nested lists of complex numbers; reports
//! come back as plain dicts.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qlc0_core::circuit::{self, random_layered};
use qlc0_core::learner::{self, AccuracySchedule, LearnOptions, PurityMode, TolerantOptions};
use qlc0_core::reduction::{run_reduction as core_run_reduction, ReductionMode};
use qlc0_core::shadow::{collect_shadows, estimate_purity};
use qlc0_core::{config, dilation, lowdeg, pauli, DenseOperator, Error, NormKind, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(qlc0, Qlc0Error, PyException);
create_exception!(qlc0, CapacityError, Qlc0Error);
create_exception!(qlc0, InfeasibleError, Qlc0Error);
create_exception!(qlc0, LearnerError, Qlc0Error);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Capacity { .. } => CapacityError::new_err(e.to_string()),
        Error::Infeasible { .. } => InfeasibleError::new_err(e.to_string()),
        Error::Learner(_) => LearnerError::new_err(e.to_string()),
        Error::Argument(_) | Error::Validation(_) | Error::Precondition(_) => PyValueError::new_err(e.to_string()),
        _ => Qlc0Error::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for qlc0_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn schedule(name: &str) -> PyResult<AccuracySchedule> {
    match name {
        "algorithm1" => Ok(AccuracySchedule::Algorithm1),
        "parseval" => Ok(AccuracySchedule::Parseval),
        other => Err(PyValueError::new_err(format!("unknown schedule {other:?}"))),
    }
}

/// Dense operator on `qubits` wires.
#[pyclass(name = "Operator", module = "qlc0", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyOperator {
    inner: DenseOperator,
}

#[pymethods]
impl PyOperator {
    #[new]
    fn new(rows: Vec<Vec<C64>>) -> PyResult<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        if !dim.is_power_of_two() {
            return Err(PyValueError::new_err("dimension must be a power of two"));
        }
        Ok(Self { inner: DenseOperator::from_fn(dim.trailing_zeros() as usize, |r, c| rows[r][c]) })
    }

    #[staticmethod]
    fn identity(qubits: usize) -> Self {
        Self { inner: DenseOperator::identity(qubits) }
    }

    #[getter]
    fn qubits(&self) -> usize {
        self.inner.qubits()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_list(&self) -> Vec<Vec<C64>> {
        (0..self.inner.dim()).map(|r| (0..self.inner.dim()).map(|c| self.inner.get(r, c)).collect()).collect()
    }

    fn __getitem__(&self, idx: (usize, usize)) -> PyResult<C64> {
        let d = self.inner.dim();
        if idx.0 >= d || idx.1 >= d {
            return Err(pyo3::exceptions::PyIndexError::new_err("index out of range"));
        }
        Ok(self.inner.get(idx.0, idx.1))
    }

    fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    fn trace(&self) -> C64 {
        self.inner.trace()
    }

    fn __matmul__(&self, other: PyRef<'_, Self>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.matmul(&other.inner).py()? })
    }

    fn __add__(&self, other: PyRef<'_, Self>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.add(&other.inner).py()? })
    }

    fn __sub__(&self, other: PyRef<'_, Self>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.sub(&other.inner).py()? })
    }

    /// `kind` is one of `spectral`, `schatten2`, `frobenius`, `trace`.
    #[pyo3(signature = (kind = "spectral"))]
    fn norm(&self, kind: &str) -> PyResult<f64> {
        let k = match kind {
            "spectral" => NormKind::Spectral,
            "schatten2" => NormKind::Schatten2Normalized,
            "frobenius" => NormKind::Frobenius,
            "trace" => NormKind::Trace,
            other => return Err(PyValueError::new_err(format!("unknown norm {other:?}"))),
        };
        Ok(qlc0_core::norm(&self.inner, k))
    }

    fn is_unitary(&self, tol: f64) -> bool {
        self.inner.is_unitary(tol)
    }

    fn pauli_expansion(&self) -> PyPauliExpansion {
        PyPauliExpansion { inner: pauli::expand(&self.inner) }
    }

    fn __repr__(&self) -> String {
        format!("Operator(qubits={})", self.inner.qubits())
    }
}

#[pyclass(name = "PauliString", module = "qlc0", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPauliString {
    inner: qlc0_core::PauliString,
}

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { inner: text.parse().py()? })
    }

    #[getter]
    fn qubits(&self) -> usize {
        self.inner.qubits()
    }

    #[getter]
    fn weight(&self) -> usize {
        self.inner.weight()
    }

    fn support(&self) -> Vec<usize> {
        self.inner.support()
    }

    fn matrix(&self) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: pauli::pauli_matrix(&self.inner).py()? })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.inner)
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }

    fn __hash__(&self) -> u64 {
        self.inner.index() ^ ((self.inner.qubits() as u64) << 58)
    }
}

/// Sparse Pauli expansion keyed by Pauli strings.
#[pyclass(name = "PauliExpansion", module = "qlc0", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPauliExpansion {
    inner: qlc0_core::PauliExpansion,
}

#[pymethods]
impl PyPauliExpansion {
    /// Builds an expansion from `{"XZ": coefficient, ...}`.
    #[new]
    fn new(qubits: usize, terms: std::collections::BTreeMap<String, C64>) -> PyResult<Self> {
        let mut p = qlc0_core::PauliExpansion::new(qubits);
        for (s, c) in terms {
            p.add_term(s.parse().py()?, c).py()?;
        }
        Ok(Self { inner: p })
    }

    #[getter]
    fn qubits(&self) -> usize {
        self.inner.qubits()
    }

    fn terms(&self) -> Vec<(String, C64)> {
        self.inner.iter().map(|(s, c)| (s.to_string(), *c)).collect()
    }

    fn coefficient(&self, s: &str) -> PyResult<C64> {
        Ok(self.inner.get(&s.parse().py()?))
    }

    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    fn truncate(&self, d: usize) -> Self {
        Self { inner: self.inner.truncate_degree(d) }
    }

    fn to_operator(&self) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: pauli::synthesize(&self.inner).py()? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PauliExpansion(qubits={}, terms={})", self.inner.qubits(), self.inner.len())
    }
}

/// Layered circuit of single-qubit gates and multi-qubit CZ gates.
#[pyclass(name = "Circuit", module = "qlc0", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCircuit {
    inner: circuit::Qac0Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Parses a circuit file; the `output_wires` field, if any, is ignored.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: circuit::ChannelSpec::from_json(text).py()?.circuit().clone() })
    }

    #[staticmethod]
    #[pyo3(signature = (n, ancillas, depth, max_cz, seed))]
    fn random(n: usize, ancillas: usize, depth: usize, max_cz: usize, seed: u64) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self { inner: random_layered(n, ancillas, depth, max_cz, &mut rng).py()? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn ancillas(&self) -> usize {
        self.inner.ancillas()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn unitary(&self) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: self.inner.build_unitary().py()? })
    }

    fn conjugate(&self, a: PyRef<'_, PyOperator>) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: self.inner.conjugate(&a.inner).py()? })
    }

    fn __repr__(&self) -> String {
        format!("Circuit(n={}, ancillas={}, depth={})", self.inner.n(), self.inner.ancillas(), self.inner.depth())
    }
}

/// A circuit together with the wires that are kept as output.
#[pyclass(name = "Channel", module = "qlc0", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyChannel {
    inner: circuit::ChannelSpec,
}

#[pymethods]
impl PyChannel {
    #[new]
    fn new(circuit: PyRef<'_, PyCircuit>, output_wires: Vec<usize>) -> PyResult<Self> {
        Ok(Self { inner: circuit::ChannelSpec::new(circuit.inner.clone(), output_wires).py()? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: circuit::ChannelSpec::from_json(text).py()? })
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
    fn circuit(&self) -> PyCircuit {
        PyCircuit { inner: self.inner.circuit().clone() }
    }

    /// Choi representation `J` (trace `2^n`).
    fn choi(&self) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: circuit::choi(&self.inner).py()?.representation })
    }

    /// Normalized Choi state `2^-n J`.
    fn choi_state(&self) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: circuit::choi(&self.inner).py()?.state })
    }

    fn apply(&self, rho: PyRef<'_, PyOperator>) -> PyResult<PyOperator> {
        Ok(PyOperator { inner: circuit::apply_channel(&self.inner, &rho.inner).py()? })
    }
}

#[pyfunction]
fn max_qubits() -> usize {
    config::max_qubits()
}

/// Sets the qubit limit; 0 restores the default.
#[pyfunction]
fn set_max_qubits(limit: usize) {
    config::set_max_qubits(limit)
}

#[pyfunction]
fn unitary_dilate(a: PyRef<'_, PyOperator>) -> PyResult<PyOperator> {
    Ok(PyOperator { inner: dilation::unitary_dilate(&a.inner).py()? })
}

#[pyfunction]
fn cz_low_degree_approx<'py>(py: Python<'py>, k: usize, r: f64) -> PyResult<Bound<'py, PyDict>> {
    let res = dilation::cz_low_degree_approx(k, r).py()?;
    let d = PyDict::new(py);
    d.set_item("k", res.k)?;
    d.set_item("r", res.r)?;
    d.set_item("degree_budget", res.degree_budget)?;
    d.set_item("degree", res.degree)?;
    d.set_item("poly_values", res.poly_values.clone())?;
    d.set_item("spectral_error", res.spectral_error)?;
    d.set_item("bound", res.paper_bound)?;
    d.set_item("bound_vacuous", res.bound_is_vacuous())?;
    Ok(d)
}

/// Low-degree approximation of `U^dagger A U` for a clean circuit.
#[pyfunction]
fn approx_circuit<'py>(
    py: Python<'py>,
    circuit: PyRef<'_, PyCircuit>,
    observable: PyRef<'_, PyPauliExpansion>,
    r: f64,
) -> PyResult<(PyPauliExpansion, Bound<'py, PyDict>)> {
    let rep = lowdeg::approx_circuit(&circuit.inner, &observable.inner, r).py()?;
    let d = PyDict::new(py);
    d.set_item("total_error", rep.total_error)?;
    d.set_item("total_error_bound", rep.total_error_bound)?;
    d.set_item("total_hybrid_bound", rep.total_hybrid_bound)?;
    d.set_item("degree_bounds", rep.degree_bounds.clone())?;
    d.set_item("norms", rep.norms.clone())?;
    d.set_item("layer_degrees", rep.per_layer.iter().map(|l| l.achieved_degree).collect::<Vec<_>>())?;
    Ok((PyPauliExpansion { inner: rep.approx }, d))
}

/// Learns the degree-`d` part of the Choi representation from simulated shadows.
#[pyfunction]
#[pyo3(signature = (channel, d, eps, delta, seed = 0, schedule_name = "algorithm1"))]
fn channel_learn<'py>(
    py: Python<'py>,
    channel: PyRef<'_, PyChannel>,
    d: usize,
    eps: f64,
    delta: f64,
    seed: u64,
    schedule_name: &str,
) -> PyResult<(PyPauliExpansion, Bound<'py, PyDict>)> {
    let opts = LearnOptions { schedule: schedule(schedule_name)?, seed, ..LearnOptions::default() };
    let spec = channel.inner.clone();
    let h = py.detach(|| learner::channel_learn(&spec, d, eps, delta, &opts)).py()?;
    let info = PyDict::new(py);
    info.set_item("samples_used", h.samples_used)?;
    info.set_item("batches", h.batches)?;
    info.set_item("shadow_accuracy", h.shadow_accuracy)?;
    Ok((PyPauliExpansion { inner: h.expansion }, info))
}

#[pyfunction]
#[pyo3(signature = (channel, d, eps1, eps2, delta, seed = 0, purity_samples = None))]
#[allow(clippy::too_many_arguments)]
fn tolerant_test<'py>(
    py: Python<'py>,
    channel: PyRef<'_, PyChannel>,
    d: usize,
    eps1: f64,
    eps2: f64,
    delta: f64,
    seed: u64,
    purity_samples: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut opts = TolerantOptions::default();
    opts.learn.seed = seed;
    if let Some(samples) = purity_samples {
        opts.purity = PurityMode::Sampled { samples };
    }
    let spec = channel.inner.clone();
    let v = py.detach(|| learner::tolerant_test(&spec, d, eps1, eps2, delta, &opts)).py()?;
    let out = PyDict::new(py);
    out.set_item("verdict", if v.verdict == learner::Verdict::Close { "close" } else { "far" })?;
    out.set_item("measured_distance_estimate", v.measured_distance_estimate)?;
    out.set_item("threshold", v.threshold)?;
    out.set_item("lower_estimate", v.lower_estimate)?;
    out.set_item("upper_estimate", v.upper_estimate)?;
    out.set_item("samples_used", v.samples_used)?;
    Ok(out)
}

/// Shadow estimate of `Tr(rho^2)`.
#[pyfunction]
fn shadow_purity(py: Python<'_>, rho: PyRef<'_, PyOperator>, samples: usize, seed: u64) -> PyResult<f64> {
    let inner = rho.inner.clone();
    py.detach(|| collect_shadows(&inner, samples, seed).and_then(|s| estimate_purity(&s))).py()
}

/// Runs the reduction with `mode` `exact` or `sampled`.
#[pyfunction]
#[pyo3(signature = (circuit, mode = "exact", eps = 0.05, delta = 0.1, seed = 0))]
fn run_reduction<'py>(
    py: Python<'py>,
    circuit: PyRef<'_, PyCircuit>,
    mode: &str,
    eps: f64,
    delta: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = match mode {
        "exact" => ReductionMode::Exact,
        "sampled" => ReductionMode::sampled(eps, delta, seed),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let c = circuit.inner.clone();
    let rep = py.detach(|| core_run_reduction(&c, &mode)).py()?;
    let out = PyDict::new(py);
    out.set_item("final_error", rep.final_error)?;
    out.set_item("hybrid_bound", rep.hybrid_bound)?;
    out.set_item("learner_bound", rep.learner_bound)?;
    out.set_item("within_bounds", rep.within_bounds())?;
    out.set_item("factor_errors", rep.wires.iter().map(|w| w.factor_error).collect::<Vec<_>>())?;
    out.set_item("sewn", Py::new(py, PyOperator { inner: rep.sewn.operator })?)?;
    Ok(out)
}

#[pymodule]
fn qlc0(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyOperator>()?;
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyPauliExpansion>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyChannel>()?;
    m.add("Qlc0Error", py.get_type::<Qlc0Error>())?;
    m.add("CapacityError", py.get_type::<CapacityError>())?;
    m.add("InfeasibleError", py.get_type::<InfeasibleError>())?;
    m.add("LearnerError", py.get_type::<LearnerError>())?;
    m.add_function(wrap_pyfunction!(max_qubits, m)?)?;
    m.add_function(wrap_pyfunction!(set_max_qubits, m)?)?;
    m.add_function(wrap_pyfunction!(unitary_dilate, m)?)?;
    m.add_function(wrap_pyfunction!(cz_low_degree_approx, m)?)?;
    m.add_function(wrap_pyfunction!(approx_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(channel_learn, m)?)?;
    m.add_function(wrap_pyfunction!(tolerant_test, m)?)?;
    m.add_function(wrap_pyfunction!(shadow_purity, m)?)?;
    m.add_function(wrap_pyfunction!(run_reduction, m)?)?;
    Ok(())
}

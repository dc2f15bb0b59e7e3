//! Python bindings for the battery-network engines.

use std::collections::BTreeSet;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qbnet_core::closed_form;
use qbnet_core::config::{spec_hash, NetworkConfig};
use qbnet_core::experiments::{self, Axis, EngineKind, FigureId, Observable, OracleSettings, SweepPlan};
use qbnet_core::moments::assemble;
use qbnet_core::spectral;
use qbnet_core::{Error, GaussianState, NetworkSpec, Reciprocity, Reservoir, TopologyKind};

fn to_py(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn topology(kind: &str) -> PyResult<TopologyKind> {
    kind.parse().map_err(to_py)
}

/// A validated network of one driven charger and `n` batteries.
#[pyclass(name = "Network", module = "qbnet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    spec: NetworkSpec,
}

#[pymethods]
impl PyNetwork {
    /// Uniform links with explicit phase `theta` and cooperative rate `gamma`.
    #[new]
    #[pyo3(signature = (topology, n, j, theta, gamma, kappa, drive, omega = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        topology: &str,
        n: usize,
        j: f64,
        theta: f64,
        gamma: f64,
        kappa: f64,
        drive: f64,
        omega: f64,
    ) -> PyResult<Self> {
        let kind = self::topology(topology)?;
        let spec = NetworkSpec::uniform(kind, n, j, theta, gamma, kappa, drive, omega).map_err(to_py)?;
        Ok(Self { spec })
    }

    /// Unidirectional links (`theta = pi/2`, `gamma = 2j`).
    #[staticmethod]
    #[pyo3(signature = (topology, n, j, kappa, drive, omega = 1.0))]
    fn nonreciprocal(topology: &str, n: usize, j: f64, kappa: f64, drive: f64, omega: f64) -> PyResult<Self> {
        let spec = NetworkSpec::nonreciprocal(self::topology(topology)?, n, j, kappa, drive, omega).map_err(to_py)?;
        Ok(Self { spec })
    }

    /// Purely coherent links.
    #[staticmethod]
    #[pyo3(signature = (topology, n, j, kappa, drive, omega = 1.0))]
    fn reciprocal(topology: &str, n: usize, j: f64, kappa: f64, drive: f64, omega: f64) -> PyResult<Self> {
        let spec = NetworkSpec::reciprocal(self::topology(topology)?, n, j, kappa, drive, omega).map_err(to_py)?;
        Ok(Self { spec })
    }

    /// Parse a JSON network config.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg = NetworkConfig::from_json(text).map_err(to_py)?;
        Ok(Self {
            spec: cfg.to_spec().map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        let cfg = NetworkConfig::from_spec(&self.spec, Reservoir::Vacuum);
        serde_json::to_string(&cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn topology(&self) -> String {
        self.spec.topology.kind.to_string()
    }

    #[getter]
    fn n_batteries(&self) -> usize {
        self.spec.topology.n_batteries
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.spec.n_modes()
    }

    #[getter]
    fn drive(&self) -> f64 {
        self.spec.drive
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.spec.frequency
    }

    /// Effective damping of every mode, charger first.
    fn effective_rates(&self) -> Vec<f64> {
        self.spec.effective_rates().lambda
    }

    /// `"nonreciprocal"`, `"reciprocal"` or `"mixed"`.
    fn reciprocity(&self) -> &'static str {
        match self.spec.check_nonreciprocity() {
            Reciprocity::Nonreciprocal => "nonreciprocal",
            Reciprocity::Reciprocal => "reciprocal",
            Reciprocity::Mixed => "mixed",
        }
    }

    /// Drift matrix of the mode amplitudes and the drive vector.
    fn drift(&self) -> (Vec<Vec<Complex64>>, Vec<Complex64>) {
        let (a, f) = self.spec.drift_matrix();
        let rows = a.row_iter().map(|r| r.iter().copied().collect()).collect();
        (rows, f.iter().copied().collect())
    }

    fn with_coupling(&self, j: f64) -> PyResult<Self> {
        Ok(Self {
            spec: self.spec.with_coupling(j).map_err(to_py)?,
        })
    }

    fn with_batteries(&self, n: usize) -> PyResult<Self> {
        Ok(Self {
            spec: self.spec.with_batteries(n).map_err(to_py)?,
        })
    }

    /// SHA-256 of the canonical network and bath description.
    #[pyo3(signature = (bath = None))]
    fn spec_hash(&self, bath: Option<&PyBath>) -> String {
        spec_hash(&self.spec, reservoir(bath))
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(topology='{}', n={}, drive={}, omega={})",
            self.spec.topology.kind, self.spec.topology.n_batteries, self.spec.drive, self.spec.frequency
        )
    }
}

/// Reservoir seen by the dissipative channels.
#[pyclass(name = "Bath", module = "qbnet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBath {
    inner: Reservoir,
}

#[pymethods]
impl PyBath {
    #[staticmethod]
    fn vacuum() -> Self {
        Self {
            inner: Reservoir::Vacuum,
        }
    }

    #[staticmethod]
    fn thermal(n_th: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Reservoir::thermal(n_th).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (r, phase = 0.0))]
    fn squeezed(r: f64, phase: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Reservoir::squeezed(r, phase).map_err(to_py)?,
        })
    }

    /// Mean occupation `N`.
    #[getter]
    fn n(&self) -> f64 {
        self.inner.p()
    }

    /// Anomalous correlation `M`.
    #[getter]
    fn m(&self) -> Complex64 {
        self.inner.q()
    }

    fn __repr__(&self) -> String {
        format!("Bath({})", self.inner.label())
    }
}

fn reservoir(bath: Option<&PyBath>) -> Reservoir {
    bath.map_or(Reservoir::Vacuum, |b| b.inner)
}

/// Per-mode energy, ergotropy and passive energy, charger first.
#[pyclass(name = "EnergyReport", module = "qbnet", frozen, skip_from_py_object)]
struct PyEnergyReport {
    #[pyo3(get)]
    energy: Vec<f64>,
    #[pyo3(get)]
    ergotropy: Vec<f64>,
    #[pyo3(get)]
    passive: Vec<f64>,
    #[pyo3(get)]
    engine: String,
    /// `None` for a steady state.
    #[pyo3(get)]
    time: Option<f64>,
}

#[pymethods]
impl PyEnergyReport {
    fn __repr__(&self) -> String {
        let time = self.time.map_or_else(|| "None".to_string(), |t| format!("{t:?}"));
        format!("EnergyReport(engine='{}', time={time}, energy={:?})", self.engine, self.energy)
    }
}

impl From<qbnet_core::EnergyReport> for PyEnergyReport {
    fn from(r: qbnet_core::EnergyReport) -> Self {
        let engine = serde_json::to_value(r.engine)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        Self {
            energy: r.per_mode_energy,
            ergotropy: r.per_mode_ergotropy,
            passive: r.per_mode_passive,
            engine,
            time: r.time,
        }
    }
}

/// Gaussian state: quadrature means `(x_0, p_0, x_1, ...)` and covariance.
#[pyclass(name = "GaussianState", module = "qbnet", frozen, skip_from_py_object)]
struct PyGaussianState {
    inner: GaussianState,
}

#[pymethods]
impl PyGaussianState {
    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean.iter().copied().collect()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        self.inner.cov.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    fn amplitude(&self, mode: usize) -> PyResult<Complex64> {
        self.check(mode)?;
        Ok(self.inner.amplitude(mode))
    }

    fn occupation(&self, mode: usize) -> PyResult<f64> {
        self.check(mode)?;
        Ok(self.inner.occupation(mode))
    }

    fn symplectic_eigenvalues(&self) -> Vec<f64> {
        self.inner.symplectic_eigenvalues()
    }
}

impl PyGaussianState {
    fn check(&self, mode: usize) -> PyResult<()> {
        if mode < self.inner.n_modes() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("mode {mode} out of range")))
        }
    }
}

/// Modal decomposition of the terminal amplitude of a reciprocal chain.
#[pyclass(name = "ParityReport", module = "qbnet", frozen, skip_from_py_object)]
struct PyParityReport {
    #[pyo3(get)]
    n_batteries: usize,
    #[pyo3(get)]
    has_zero_mode: bool,
    #[pyo3(get)]
    energies: Vec<f64>,
    #[pyo3(get)]
    mode_weights: Vec<Complex64>,
    #[pyo3(get)]
    terminal_amplitude: Complex64,
    #[pyo3(get)]
    terminal_energy: f64,
    #[pyo3(get)]
    central_mode: usize,
}

fn engine_kind(name: &str) -> PyResult<EngineKind> {
    name.parse().map_err(to_py)
}

/// Energetics from one engine, at time `t` from the ground state or in the
/// steady state when `t` is `None`.
#[pyfunction]
#[pyo3(signature = (network, t = None, bath = None, engine = "gaussian", fock_levels = 12, fock_window = 200.0))]
fn report(
    py: Python<'_>,
    network: &PyNetwork,
    t: Option<f64>,
    bath: Option<&PyBath>,
    engine: &str,
    fock_levels: usize,
    fock_window: f64,
) -> PyResult<PyEnergyReport> {
    let kind = engine_kind(engine)?;
    let settings = OracleSettings {
        levels: fock_levels,
        window: fock_window,
        ..OracleSettings::default()
    };
    let spec = network.spec.clone();
    let bath = reservoir(bath);
    py.detach(|| experiments::engine_report(kind, &spec, bath, t, &settings))
        .map(Into::into)
        .map_err(to_py)
}

/// Gaussian states at each of `times`, starting from the ground state.
#[pyfunction]
#[pyo3(signature = (network, times, bath = None))]
fn evolve(py: Python<'_>, network: &PyNetwork, times: Vec<f64>, bath: Option<&PyBath>) -> PyResult<Vec<PyGaussianState>> {
    let sys = assemble(&network.spec, reservoir(bath));
    let ground = GaussianState::ground(network.spec.n_modes());
    let states = py.detach(|| sys.evolve(&ground, &times)).map_err(to_py)?;
    Ok(states.into_iter().map(|inner| PyGaussianState { inner }).collect())
}

/// Gaussian steady state.
#[pyfunction]
#[pyo3(signature = (network, bath = None))]
fn steady_state(network: &PyNetwork, bath: Option<&PyBath>) -> PyResult<PyGaussianState> {
    let sys = assemble(&network.spec, reservoir(bath));
    let inner = sys.steady_state().map_err(to_py)?;
    Ok(PyGaussianState { inner })
}

/// Closed-form energy of `mode` (0 = charger) at time `t`, or in the steady
/// state when `t` is `None`. Requires a vacuum bath.
#[pyfunction]
#[pyo3(signature = (network, mode, t = None))]
fn closed_form_energy(network: &PyNetwork, mode: usize, t: Option<f64>) -> PyResult<f64> {
    let spec = &network.spec;
    match (spec.topology.kind, t) {
        (TopologyKind::Cascaded, None) => closed_form::energy_cascaded_ss(spec, mode),
        (TopologyKind::Cascaded, Some(t)) => closed_form::energy_cascaded_t(spec, mode, t),
        (TopologyKind::Parallel, None) => closed_form::energy_parallel_ss(spec, mode),
        (TopologyKind::Parallel, Some(t)) => closed_form::energy_parallel_t(spec, mode, t),
    }
    .map_err(to_py)
}

/// Coupling maximizing the steady terminal energy of a unidirectional network.
#[pyfunction]
fn optimal_coupling(topology: &str, n: usize, kappa: f64) -> PyResult<f64> {
    Ok(closed_form::optimal_coupling(self::topology(topology)?, n, kappa))
}

#[pyfunction]
fn parity_report(n: usize, j: f64, kappa: f64, drive: f64) -> PyResult<PyParityReport> {
    let r = spectral::parity_report(n, j, kappa, drive).map_err(to_py)?;
    Ok(PyParityReport {
        central_mode: r.central_mode(),
        n_batteries: r.n_batteries,
        has_zero_mode: r.has_zero_mode,
        energies: r.energies,
        mode_weights: r.mode_weights,
        terminal_amplitude: r.terminal_amplitude,
        terminal_energy: r.terminal_energy,
    })
}

/// Run a one-dimensional sweep and return `(csv, disagreements)`.
#[pyfunction]
#[pyo3(signature = (network, axis, grid, observables = vec!["energy".to_string()], engines = vec!["gaussian".to_string()], bath = None, workers = 1))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    network: &PyNetwork,
    axis: &str,
    grid: Vec<f64>,
    observables: Vec<String>,
    engines: Vec<String>,
    bath: Option<&PyBath>,
    workers: usize,
) -> PyResult<(String, Vec<String>)> {
    let plan = SweepPlan {
        spec: network.spec.clone(),
        bath: reservoir(bath),
        axis: axis.parse::<Axis>().map_err(to_py)?,
        grid,
        observables: observables
            .iter()
            .map(|o| o.parse::<Observable>())
            .collect::<Result<BTreeSet<_>, _>>()
            .map_err(to_py)?,
        engines: engines
            .iter()
            .map(|e| e.parse::<EngineKind>())
            .collect::<Result<BTreeSet<_>, _>>()
            .map_err(to_py)?,
        oracle: OracleSettings::default(),
        relax_threshold: 0.95,
    };
    let result = py.detach(|| experiments::run(&plan, workers)).map_err(to_py)?;
    Ok((result.to_csv().map_err(to_py)?, result.disagreements))
}

/// Regenerate a figure's data into `out_dir` and return the written paths.
#[pyfunction]
#[pyo3(signature = (figure, out_dir, workers = 1))]
fn reproduce(py: Python<'_>, figure: &str, out_dir: PathBuf, workers: usize) -> PyResult<Vec<PathBuf>> {
    let fig: FigureId = figure.parse().map_err(to_py)?;
    py.detach(|| experiments::reproduce(fig, &out_dir, workers)).map_err(to_py)
}

#[pymodule]
fn qbnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyBath>()?;
    m.add_class::<PyEnergyReport>()?;
    m.add_class::<PyGaussianState>()?;
    m.add_class::<PyParityReport>()?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_energy, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(parity_report, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}

//! Python bindings: configs, episode runs, ensembles, and the analysis
//! suite, with reports handed back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};

use agisim_core::analysis;
use agisim_core::config;
use agisim_core::engine;
use agisim_core::mechanisms;
use agisim_core::model::PlayerId;
use agisim_core::output;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64()
                    .ok_or_else(|| value_error("non-finite number"))?
                    .into_pyobject(py)?
                    .into_any()
            }
        }
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn report_to_py<T: serde::Serialize>(py: Python<'_>, report: &T) -> PyResult<Py<PyAny>> {
    let value = serde_json::to_value(report).map_err(runtime_error)?;
    Ok(json_to_py(py, &value)?.unbind())
}

/// A fully resolved run configuration.
#[pyclass(name = "SimulationConfig", skip_from_py_object)]
#[derive(Clone)]
struct PySimulationConfig {
    inner: config::SimulationConfig,
}

#[pymethods]
impl PySimulationConfig {
    /// Defaults with a chosen master seed.
    #[new]
    #[pyo3(signature = (seed = 0))]
    fn new(seed: u64) -> Self {
        PySimulationConfig {
            inner: config::SimulationConfig::with_seed(seed),
        }
    }

    /// Parse a config (or manifest) JSON string, applying defaults and
    /// validating.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySimulationConfig {
            inner: config::parse_config_str(text).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(runtime_error)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn episodes(&self) -> u32 {
        self.inner.episodes
    }

    #[setter]
    fn set_episodes(&mut self, episodes: u32) {
        self.inner.episodes = episodes;
    }

    /// Set a model coefficient or mechanism field by name (as in `sweep`).
    fn set_param(&mut self, name: &str, value: f64) -> PyResult<()> {
        config::set_parameter(&mut self.inner, name, value).map_err(value_error)
    }

    /// Strategy for every player without an override: one of grim-trigger,
    /// always-cooperate, always-defect, tit-for-tat, rational-defector.
    fn set_default_strategy(&mut self, name: &str) -> PyResult<()> {
        self.inner.default_strategy = analysis::deviation_by_name(name).map_err(value_error)?;
        Ok(())
    }

    /// Override one founder's strategy.
    fn set_player_strategy(&mut self, player: u32, name: &str) -> PyResult<()> {
        let spec = analysis::deviation_by_name(name).map_err(value_error)?;
        self.inner.player_strategies.insert(player, spec);
        Ok(())
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimulationConfig(seed={}, episodes={}, horizon={}, n_initial={})",
            self.inner.seed,
            self.inner.episodes,
            self.inner.params.horizon,
            self.inner.params.n_initial
        )
    }
}

/// One simulated episode.
#[pyclass(name = "Trajectory")]
struct PyTrajectory {
    inner: engine::Trajectory,
    params: agisim_core::params::Parameters,
    episode: u32,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps.len()
    }

    #[getter]
    fn entrants(&self) -> u32 {
        self.inner.entrants
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.inner.tail_bound
    }

    #[getter]
    fn final_knowledge(&self) -> f64 {
        self.inner.final_state.knowledge
    }

    #[getter]
    fn final_security(&self) -> f64 {
        self.inner.final_state.security
    }

    /// Final capability per player id.
    #[getter]
    fn final_capabilities(&self) -> Vec<f64> {
        self.inner.final_state.capabilities.clone()
    }

    fn discounted_utility(&self, player: u32) -> PyResult<f64> {
        self.inner
            .discounted_utility(PlayerId(player), &self.params)
            .map_err(value_error)
    }

    /// The trajectory as CSV text (same columns as the CLI output).
    fn to_csv(&self) -> PyResult<String> {
        let rows = output::trajectory_rows(self.episode, &self.inner);
        let mut writer = csv_writer();
        for row in &rows {
            writer.serialize(row).map_err(runtime_error)?;
        }
        String::from_utf8(writer.into_inner().map_err(runtime_error)?).map_err(runtime_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(steps={}, players={}, entrants={})",
            self.inner.steps.len(),
            self.inner.final_state.player_count(),
            self.inner.entrants
        )
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

/// Run one episode of the configured game.
#[pyfunction]
#[pyo3(signature = (config, episode = 0))]
fn run_episode(config: &PySimulationConfig, episode: u32) -> PyResult<PyTrajectory> {
    config.inner.validate().map_err(value_error)?;
    let trajectory = engine::run_episode(&config.inner, episode).map_err(runtime_error)?;
    Ok(PyTrajectory {
        inner: trajectory,
        params: config.inner.params.clone(),
        episode,
    })
}

/// Run the configured Monte Carlo ensemble; returns the stats as a dict.
#[pyfunction]
fn run_ensemble(py: Python<'_>, config: &PySimulationConfig) -> PyResult<Py<PyAny>> {
    let stats = engine::run_ensemble(&config.inner).map_err(runtime_error)?;
    report_to_py(py, &stats)
}

/// Cooperation conditions, folk threshold, and deterrence bound for a
/// config, as a dict.
#[pyfunction]
fn check(py: Python<'_>, config: &PySimulationConfig) -> PyResult<Py<PyAny>> {
    let report = analysis::check_config(&config.inner).map_err(value_error)?;
    report_to_py(py, &report)
}

/// Deterrence bound `1 / (1 + p * xi * tau)`.
#[pyfunction]
fn defection_bound(p_audit_freq: f64, xi: f64, tau: f64) -> PyResult<f64> {
    analysis::defection_bound(p_audit_freq, xi, tau).map_err(value_error)
}

/// Paired-seed unilateral deviation test; returns the report as a dict.
#[pyfunction]
fn deviation_test(
    py: Python<'_>,
    config: &PySimulationConfig,
    deviant: u32,
    strategy: &str,
) -> PyResult<Py<PyAny>> {
    let deviation = analysis::deviation_by_name(strategy).map_err(value_error)?;
    let report = analysis::deviation_test(&config.inner, deviant, &deviation, strategy)
        .map_err(runtime_error)?;
    report_to_py(py, &report)
}

/// Names of the standard deviation library.
#[pyfunction]
fn deviation_library() -> Vec<String> {
    analysis::deviation_library()
        .into_iter()
        .map(|(name, _)| name)
        .collect()
}

/// Measured defection rate vs. the deterrence bound, as a dict.
#[pyfunction]
fn empirical_defection_rate(py: Python<'_>, config: &PySimulationConfig) -> PyResult<Py<PyAny>> {
    let report = analysis::empirical_defection_rate(&config.inner).map_err(runtime_error)?;
    report_to_py(py, &report)
}

/// Sampled increasing-differences check of information sharing.
#[pyfunction]
#[pyo3(signature = (config, samples = 1000, seed = 0))]
fn supermodularity_check(
    py: Python<'_>,
    config: &PySimulationConfig,
    samples: u32,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let report = analysis::supermodularity_check(
        &config.inner.params,
        config.inner.params.n_initial.max(2) as usize,
        samples,
        seed,
    );
    report_to_py(py, &report)
}

/// SHA-256 commitment to a pre-registration plan; returns the hex digest.
#[pyfunction]
fn commit_plan(plan: &[u8]) -> PyResult<String> {
    let commitment =
        mechanisms::commit_preregistration(plan, PlayerId(0), 0).map_err(value_error)?;
    Ok(hex::encode(commitment.digest))
}

/// Check a revealed plan against a hex digest from `commit_plan`.
#[pyfunction]
fn verify_plan(digest_hex: &str, plan: &[u8]) -> PyResult<bool> {
    let bytes = hex::decode(digest_hex).map_err(value_error)?;
    let digest: [u8; 32] = bytes
        .try_into()
        .map_err(|_| value_error("digest must be 32 bytes of hex"))?;
    let commitment = mechanisms::Commitment {
        player: PlayerId(0),
        t_committed: 0,
        digest,
        revealed: None,
    };
    Ok(mechanisms::verify_commitment(&commitment, plan))
}

/// Milestone timesteps `tau, 2*tau, ... <= horizon`.
#[pyfunction]
fn milestone_schedule(tau: u32, horizon: u32) -> PyResult<Vec<u32>> {
    mechanisms::milestone_schedule(tau, horizon).map_err(value_error)
}

/// Membership tier from the two-factor thresholds, as a string.
#[pyfunction]
#[pyo3(signature = (compute, capability, max_compute, max_capability,
                    compute_fraction = 0.20, capability_fraction = 0.80))]
fn classify_membership(
    compute: f64,
    capability: f64,
    max_compute: f64,
    max_capability: f64,
    compute_fraction: f64,
    capability_fraction: f64,
) -> String {
    let thresholds = mechanisms::TierThresholds {
        compute_fraction_min: compute_fraction,
        capability_fraction_min: capability_fraction,
    };
    match mechanisms::classify_membership(
        compute,
        capability,
        max_compute,
        max_capability,
        &thresholds,
    ) {
        mechanisms::MembershipTier::Core => "Core".to_string(),
        mechanisms::MembershipTier::Associate => "Associate".to_string(),
        mechanisms::MembershipTier::Observer => "Observer".to_string(),
    }
}

#[pymodule]
fn agisim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimulationConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(defection_bound, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_test, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_library, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_defection_rate, m)?)?;
    m.add_function(wrap_pyfunction!(supermodularity_check, m)?)?;
    m.add_function(wrap_pyfunction!(commit_plan, m)?)?;
    m.add_function(wrap_pyfunction!(verify_plan, m)?)?;
    m.add_function(wrap_pyfunction!(milestone_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(classify_membership, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

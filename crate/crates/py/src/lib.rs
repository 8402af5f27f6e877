//! Python bindings. Results come back as plain dicts and lists; scenarios
//! are wrapped so they can be tweaked before running.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use unblock_core::channel::{noise_floor_dbm as floor, LinkBudgetParams};
use unblock_core::config::{preset_names, ScenarioConfig};
use unblock_core::engine::bct::{bct_report, bct_scenario, parse_mobility};
use unblock_core::export::RunSummary;
use unblock_core::nr::{self, NrConfig};
use unblock_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownPreset(name) => PyKeyError::new_err(format!("unknown preset `{name}`")),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A scenario configuration.
#[pyclass(name = "Scenario", module = "unblock", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// Parse a TOML scenario document.
    #[new]
    #[pyo3(signature = (document = ""))]
    fn new(document: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: ScenarioConfig::parse(document).map_err(py_err)?,
        })
    }

    /// A shipped preset by name, or a scenario file path.
    #[staticmethod]
    fn load(spec: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: ScenarioConfig::load(spec).map_err(py_err)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.render().map_err(py_err)
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name.clone()
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
    fn duration_s(&self) -> f64 {
        self.inner.duration_s
    }

    #[setter]
    fn set_duration_s(&mut self, d: f64) -> PyResult<()> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(PyValueError::new_err(
                "duration_s must be a finite value > 0",
            ));
        }
        self.inner.duration_s = d;
        Ok(())
    }

    /// Enable or disable discovery and backup operation together.
    fn set_unblock(&mut self, enabled: bool) {
        self.inner.set_unblock(enabled);
    }

    /// Override the presence probability of every reflector.
    fn set_nlos_probability(&mut self, p: f64) -> PyResult<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PyValueError::new_err("probability must be in [0, 1]"));
        }
        for s in &mut self.inner.surfaces {
            s.presence_probability = p;
        }
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, seed={}, duration_s={})",
            self.inner.name, self.inner.seed, self.inner.duration_s
        )
    }
}

/// Run one scenario. Returns a dict with `metrics`, `blockages`,
/// `discovery_windows` and `events`; `trace` too when `with_trace` is set.
#[pyfunction]
#[pyo3(signature = (scenario, with_trace = false))]
fn run<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    with_trace: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = scenario.inner.clone();
    let out = py.detach(|| unblock_core::run(&cfg)).map_err(py_err)?;
    let summary = RunSummary::new(
        cfg.name.as_deref(),
        cfg.seed,
        cfg.protocol.rescan_enabled && cfg.protocol.nbo_enabled,
        &out,
    );
    let dict = serialize(py, &summary)?;
    dict.set_item("events", serialize(py, &out.events)?)?;
    if with_trace {
        dict.set_item("trace", serialize(py, &out.trace)?)?;
    }
    Ok(dict)
}

/// `n` replications seeded from `seed` (default: the scenario seed).
#[pyfunction]
#[pyo3(signature = (scenario, n, seed = None))]
fn campaign<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    n: usize,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = scenario.inner.clone();
    let master = seed.unwrap_or(cfg.seed);
    let summary = py
        .detach(|| unblock_core::campaign(&cfg, n, master))
        .map_err(py_err)?;
    serialize(py, &summary)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    preset_names().collect()
}

#[pyfunction]
#[pyo3(signature = (bandwidth_ghz = 2.0, noise_figure_db = 8.0))]
fn noise_floor_dbm(bandwidth_ghz: f64, noise_figure_db: f64) -> PyResult<f64> {
    let link = LinkBudgetParams {
        bandwidth_ghz,
        noise_figure_db,
        ..Default::default()
    };
    link.validate().map_err(py_err)?;
    Ok(floor(&link))
}

fn nr_config(
    ssb_per_slot: u32,
    pre_access_period_us: u64,
    post_access_period_us: Option<u64>,
) -> NrConfig {
    NrConfig {
        ssb_per_slot,
        pre_access_burst_period_us: pre_access_period_us,
        post_access_burst_period_us: post_access_period_us,
        ..Default::default()
    }
}

/// Seconds to scan every SSB beam with `ue_rx_beams` receive beams.
#[pyfunction]
#[pyo3(signature = (ue_rx_beams, pre_access_period_us = 20_000))]
fn initial_scan_latency(ue_rx_beams: u32, pre_access_period_us: u64) -> PyResult<f64> {
    let cfg = nr_config(1, pre_access_period_us, Some(5_000));
    nr::initial_scan_latency(&cfg, ue_rx_beams).map_err(py_err)
}

/// Whether MS plus BS discovery fits in one rescan window after access.
#[pyfunction]
#[pyo3(signature = (ms_beams = 25, rescan_interval_us = 100_000, ssb_per_slot = 1, post_access_period_us = Some(5_000)))]
fn nr_feasibility<'py>(
    py: Python<'py>,
    ms_beams: u32,
    rescan_interval_us: u64,
    ssb_per_slot: u32,
    post_access_period_us: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = nr_config(ssb_per_slot, 20_000, post_access_period_us);
    let report = nr::unblock_feasibility(&cfg, ms_beams, rescan_interval_us).map_err(py_err)?;
    serialize(py, &report)
}

/// Beam coherence time in seconds of the reference room (or `scenario`'s
/// geometry) for `rot:<rad/s>` or `walk:<m/s>` mobility. `None` if the beam
/// never expires within `duration_s`.
#[pyfunction]
#[pyo3(signature = (mobility, distance_m = 5.0, duration_s = 5.0, step_ms = 1.0, scenario = None))]
fn bct(
    mobility: &str,
    distance_m: f64,
    duration_s: f64,
    step_ms: f64,
    scenario: Option<&PyScenario>,
) -> PyResult<Option<f64>> {
    let model = parse_mobility(mobility).map_err(py_err)?;
    let cfg = match scenario {
        Some(s) => {
            let mut c = s.inner.clone();
            c.mobility = model;
            c
        }
        None => bct_scenario(distance_m, model),
    };
    let report = bct_report(&cfg, duration_s, step_ms / 1e3).map_err(py_err)?;
    Ok(report.nlos_bct_s)
}

#[pymodule]
fn unblock(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(campaign, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(noise_floor_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(initial_scan_latency, m)?)?;
    m.add_function(wrap_pyfunction!(nr_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(bct, m)?)?;
    Ok(())
}

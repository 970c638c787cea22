//! Python module `dcqe`: scenarios, event streams, analysis and audits.
//!
//! Structured results are returned as plain dicts and lists.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use dcqe_core::analysis::{
    self, estimate_mutual_information, fit_fringes, ks_two_sample, FitOptions, FringeEnvelope, Histogram, MiOptions,
};
use dcqe_core::config::{self, ScenarioConfig};
use dcqe_core::optics::{transfer_coefficients, validate_unitarity, GraphPreset};
use dcqe_core::scenarios::{DetectionEvent, Setting};
use dcqe_core::spacetime::{self as st, SpacetimeEvent};
use dcqe_core::{report, stream};

create_exception!(dcqe, DcqeError, PyException);
create_exception!(dcqe, ConfigError, DcqeError);
create_exception!(dcqe, StreamError, DcqeError);
create_exception!(dcqe, AnalysisError, DcqeError);

fn config_err(e: config::ConfigError) -> PyErr {
    ConfigError::new_err(e.to_string())
}

fn analysis_err(e: analysis::AnalysisError) -> PyErr {
    AnalysisError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| DcqeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// One photon detection.
#[pyclass(module = "dcqe", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct Event {
    inner: DetectionEvent,
}

#[pymethods]
impl Event {
    #[new]
    #[pyo3(signature = (emission_index, detector, t, x=None, setting="ERASE"))]
    fn new(emission_index: u64, detector: String, t: f64, x: Option<f64>, setting: &str) -> PyResult<Self> {
        let setting =
            Setting::parse(setting).ok_or_else(|| PyValueError::new_err(format!("unknown setting `{setting}`")))?;
        Ok(Event {
            inner: DetectionEvent {
                emission_index,
                detector,
                t,
                x,
                setting,
            },
        })
    }

    #[getter]
    fn emission_index(&self) -> u64 {
        self.inner.emission_index
    }

    #[getter]
    fn detector(&self) -> &str {
        &self.inner.detector
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn x(&self) -> Option<f64> {
        self.inner.x
    }

    #[getter]
    fn setting(&self) -> &'static str {
        self.inner.setting.as_str()
    }

    fn __repr__(&self) -> String {
        let e = &self.inner;
        format!(
            "Event(emission_index={}, detector='{}', t={:e}, x={}, setting='{}')",
            e.emission_index,
            e.detector,
            e.t,
            e.x.map_or("None".into(), |x| format!("{x:e}")),
            e.setting.as_str()
        )
    }
}

fn unwrap_events(events: Vec<Event>) -> Vec<DetectionEvent> {
    events.into_iter().map(|e| e.inner).collect()
}

fn wrap_events(events: Vec<DetectionEvent>) -> Vec<Event> {
    events.into_iter().map(|inner| Event { inner }).collect()
}

/// A validated scenario configuration.
#[pyclass(module = "dcqe", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Scenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    /// Built-in or `$DCQE_PRESET_DIR` preset.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let src = config::preset_source(name).map_err(config_err)?;
        Self::from_toml(&src)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = ScenarioConfig::from_toml_str(text).map_err(config_err)?;
        Ok(Scenario { cfg })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let cfg = config::parse_scenario(&path).map_err(config_err)?;
        Ok(Scenario { cfg })
    }

    /// Copy with a different seed and/or emission count.
    #[pyo3(signature = (seed=None, n_emissions=None))]
    fn with_run(&self, seed: Option<u64>, n_emissions: Option<u64>) -> PyResult<Self> {
        let mut cfg = self.cfg.clone();
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(n) = n_emissions {
            cfg.n_emissions = n;
        }
        cfg.validate().map_err(config_err)?;
        Ok(Scenario { cfg })
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.cfg.name.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    #[getter]
    fn n_emissions(&self) -> u64 {
        self.cfg.n_emissions
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.cfg.model.kind.as_str()
    }

    #[getter]
    fn hash(&self) -> String {
        self.cfg.hash()
    }

    fn to_toml(&self) -> String {
        self.cfg.to_toml_string()
    }

    fn canonical_json(&self) -> String {
        self.cfg.canonical_json()
    }

    /// Event stream in time order.
    fn simulate(&self, py: Python<'_>) -> PyResult<Vec<Event>> {
        let cfg = &self.cfg;
        let events = py.detach(|| cfg.simulate()).map_err(config_err)?;
        Ok(wrap_events(events))
    }

    /// Full analysis report as a dict.
    fn analyze<'py>(&self, py: Python<'py>, events: Vec<Event>) -> PyResult<Bound<'py, PyAny>> {
        let events = unwrap_events(events);
        let cfg = &self.cfg;
        let r = py.detach(|| report::analyze(cfg, &events)).map_err(config_err)?;
        to_py(py, &r)
    }

    /// Light-cone audit of the detector geometry.
    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let built = self.cfg.build().map_err(config_err)?;
        let eps = self.cfg.analysis.lightlike_epsilon_ns * 1e-9;
        let r = st::audit_topology(&built.scenario, eps).map_err(|e| ConfigError::new_err(e.to_string()))?;
        to_py(py, &r)
    }

    /// Arrival delay of every idler detector, in seconds.
    fn idler_delays(&self) -> PyResult<Vec<(String, f64)>> {
        let built = self.cfg.build().map_err(config_err)?;
        let mut out = Vec::new();
        for tc in built.scenario.all_coefficients() {
            for (k, d) in tc.detectors().iter().enumerate() {
                if !out.iter().any(|(n, _): &(String, f64)| n == d) {
                    out.push((d.clone(), tc.delay_at(k)));
                }
            }
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, model={}, seed={}, n_emissions={})",
            self.cfg.name.as_deref().unwrap_or(""),
            self.cfg.model.kind.as_str(),
            self.cfg.seed,
            self.cfg.n_emissions
        )
    }
}

#[pyfunction]
fn presets() -> Vec<String> {
    config::preset_names()
}

#[pyfunction]
fn write_stream(path: PathBuf, scenario: &Scenario, events: Vec<Event>) -> PyResult<()> {
    stream::write_stream_file(&path, &scenario.cfg, &unwrap_events(events))
        .map_err(|e| StreamError::new_err(e.to_string()))
}

/// Returns `(scenario, events)` from a stream file.
#[pyfunction]
fn read_stream(path: PathBuf) -> PyResult<(Scenario, Vec<Event>)> {
    let (header, events) = stream::read_stream_file(&path).map_err(|e| StreamError::new_err(e.to_string()))?;
    Ok((Scenario { cfg: header.config }, wrap_events(events)))
}

/// Transfer coefficients and unitarity check of a graph preset.
#[pyfunction]
#[pyo3(signature = (preset, length_m=None))]
fn graph_coefficients<'py>(py: Python<'py>, preset: &str, length_m: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let graph = GraphPreset::by_name(preset, length_m)
        .ok_or_else(|| ConfigError::new_err(format!("unknown graph preset `{preset}`")))?
        .build();
    let tc = transfer_coefficients(&graph);
    #[derive(Serialize)]
    struct Row {
        detector: String,
        from_a: (f64, f64),
        from_b: (f64, f64),
        delay_s: f64,
    }
    #[derive(Serialize)]
    struct Out {
        detectors: Vec<Row>,
        unitarity: dcqe_core::optics::UnitarityReport,
    }
    let rows = tc
        .detectors()
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let a = tc.coeff_at(dcqe_core::optics::Source::A, k);
            let b = tc.coeff_at(dcqe_core::optics::Source::B, k);
            Row {
                detector: d.clone(),
                from_a: (a.re, a.im),
                from_b: (b.re, b.im),
                delay_s: tc.delay_at(k),
            }
        })
        .collect();
    to_py(
        py,
        &Out {
            detectors: rows,
            unitarity: validate_unitarity(&tc),
        },
    )
}

/// Interval class of `(t, pos)` relative to `(t0, pos0)`.
#[pyfunction]
#[pyo3(signature = (t0, pos0, t, pos, epsilon_s=st::DEFAULT_LIGHTLIKE_EPSILON_S))]
fn classify_interval<'py>(
    py: Python<'py>,
    t0: f64,
    pos0: [f64; 3],
    t: f64,
    pos: [f64; 3],
    epsilon_s: f64,
) -> PyResult<Bound<'py, PyAny>> {
    if !(epsilon_s >= 0.0) {
        return Err(PyValueError::new_err("epsilon_s must be >= 0"));
    }
    let c = st::classify_interval(&SpacetimeEvent::new("a", t0, pos0), &SpacetimeEvent::new("b", t, pos), epsilon_s);
    to_py(py, &c)
}

/// Fringe fit of positions histogrammed on `[lo, hi)` with a flat envelope.
#[pyfunction]
#[pyo3(signature = (x, lo, hi, bins, period, period_search=0.1))]
fn fit_fringe<'py>(
    py: Python<'py>,
    x: Vec<f64>,
    lo: f64,
    hi: f64,
    bins: usize,
    period: f64,
    period_search: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let h = Histogram::from_values(lo, hi, bins, x).map_err(analysis_err)?;
    let opts = FitOptions {
        period_search,
        ..Default::default()
    };
    let fit = fit_fringes(&h, &FringeEnvelope::Flat, period, opts).map_err(analysis_err)?;
    to_py(py, &fit)
}

#[pyfunction]
fn ks_test<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ks_two_sample(&a, &b).map_err(analysis_err)?)
}

/// Bias-corrected mutual information (bits) with a bootstrap interval.
#[pyfunction]
#[pyo3(signature = (labels, outcomes, n_labels, n_bins, resamples=200, seed=0))]
fn mutual_information<'py>(
    py: Python<'py>,
    labels: Vec<usize>,
    outcomes: Vec<usize>,
    n_labels: usize,
    n_bins: usize,
    resamples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = MiOptions {
        resamples,
        seed,
        ..Default::default()
    };
    let mi = estimate_mutual_information(&labels, &outcomes, n_labels, n_bins, opts).map_err(analysis_err)?;
    to_py(py, &mi)
}

#[pymodule]
fn dcqe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SPEED_OF_LIGHT", dcqe_core::SPEED_OF_LIGHT)?;
    m.add("DcqeError", m.py().get_type::<DcqeError>())?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("StreamError", m.py().get_type::<StreamError>())?;
    m.add("AnalysisError", m.py().get_type::<AnalysisError>())?;
    m.add_class::<Event>()?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(write_stream, m)?)?;
    m.add_function(wrap_pyfunction!(read_stream, m)?)?;
    m.add_function(wrap_pyfunction!(graph_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(classify_interval, m)?)?;
    m.add_function(wrap_pyfunction!(fit_fringe, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    Ok(())
}

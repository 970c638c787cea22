//! Scenario files: TOML documents with unit-suffixed keys, validated against
//! a schema, hashed canonically, and turned into runnable scenarios.

mod presets;
mod schema;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optics::{build_path_graph, GraphConfig, GraphPreset, PathGraph, SignalArmModel};
use crate::scenarios::{
    encode_message, run_scenario, BiphotonScenario, ConjectureModel, DetectionEvent, EmissionPlan,
    Geometry, ScenarioError, ScheduleChange, Timing, TriggerSchedule,
};

pub use presets::{preset_names, preset_source, PRESET_DIR_ENV};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("TOML syntax error: {0}")]
    Syntax(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

impl From<ScenarioError> for ConfigError {
    fn from(e: ScenarioError) -> Self {
        ConfigError::Invalid(vec![e.to_string()])
    }
}

/// Idler graph: a named preset or an inline element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length_m: Option<f64>,
    },
    Inline(GraphConfig),
}

impl GraphSpec {
    pub fn build(&self) -> Result<PathGraph, ConfigError> {
        match self {
            GraphSpec::Preset { preset, length_m } => GraphPreset::by_name(preset, *length_m)
                .map(GraphPreset::build)
                .ok_or_else(|| {
                    ConfigError::Invalid(vec![format!("unknown graph preset `{preset}`")])
                }),
            GraphSpec::Inline(cfg) => build_path_graph(cfg.clone())
                .map_err(|e| ConfigError::Invalid(vec![format!("graph: {e}")])),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub changes: Vec<ScheduleChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_period_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_s: Option<f64>,
}

impl ScheduleSpec {
    pub fn build(&self, remote_distance_m: f64) -> Result<TriggerSchedule, ScenarioError> {
        match (&self.message, self.symbol_period_s) {
            (Some(bits), Some(period)) => {
                encode_message(bits, period, self.start_s.unwrap_or(0.0), remote_distance_m)
            }
            (Some(_), None) => Err(ScenarioError::Invalid(
                "message needs symbol_period_s".into(),
            )),
            (None, _) => TriggerSchedule::new(self.changes.clone(), remote_distance_m),
        }
    }
}

/// Analysis parameters; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    pub bins: usize,
    pub coincidence_window_ns: f64,
    pub lightlike_epsilon_ns: f64,
    pub onset_window_emissions: usize,
    pub cusum_k: f64,
    pub cusum_h: f64,
    /// Tilt of the PAST_HS onset hypothesis.
    pub past_kappa_prime: f64,
    pub mi_bins: usize,
    pub bootstrap_resamples: usize,
    pub alpha: f64,
    pub peak_min_separation_m: f64,
    /// Number of marking-scan segments; 0 disables the scan.
    pub scan_positions: usize,
    /// τ bin centres; empty disables the τ test.
    pub tau_bins_s: Vec<f64>,
    /// Fringe visibility of unmarked emissions; defaults to the model's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_visibility: Option<f64>,
    /// Message decoding threshold; defaults to half the reference visibility.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decode_threshold: Option<f64>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            bins: 64,
            coincidence_window_ns: 3.0,
            lightlike_epsilon_ns: 0.01,
            onset_window_emissions: 500,
            cusum_k: 1.0,
            cusum_h: 8.0,
            past_kappa_prime: 1.0,
            mi_bins: 64,
            bootstrap_resamples: 200,
            alpha: 0.01,
            peak_min_separation_m: 0.1e-3,
            scan_positions: 0,
            tau_bins_s: Vec::new(),
            reference_visibility: None,
            decode_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    pub n_emissions: u64,
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mark_graph: Option<GraphSpec>,
    #[serde(default)]
    pub signal: SignalArmModel,
    pub geometry: Geometry,
    pub emission: Timing,
    pub model: ConjectureModel,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

/// A configuration turned into runnable parts.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub scenario: BiphotonScenario,
    pub model: ConjectureModel,
    pub kappa: f64,
}

impl ScenarioConfig {
    /// Parses and validates TOML text, reporting every schema violation.
    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = src
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let errors = schema::validate(&table);
        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors));
        }
        let cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Invalid(vec![e.message().to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(src: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(src)
            .map_err(|e| ConfigError::Invalid(vec![format!("embedded config: {e}")]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks that need the whole document.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if self.seed > i64::MAX as u64 {
            errors.push(format!("seed: must be <= {}", i64::MAX));
        }
        if let Err(e) = self.build() {
            match e {
                ConfigError::Invalid(v) => errors.extend(v),
                other => errors.push(other.to_string()),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    /// Canonical TOML: fixed key order, every analysis default spelled out.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    /// Canonical JSON with sorted keys.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("scenario configs always serialize");
        serde_json::to_string(&v).expect("JSON values always serialize")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn build(&self) -> Result<BuiltScenario, ConfigError> {
        let erase_graph = self.graph.build()?;
        let mark_graph = self.mark_graph.as_ref().map(GraphSpec::build).transpose()?;
        self.signal
            .validate()
            .map_err(|e| ConfigError::Invalid(vec![format!("signal: {e}")]))?;
        let emission = EmissionPlan::new(self.n_emissions, self.emission.clone(), self.seed)?;
        let schedule = self.schedule.build(self.geometry.remote_distance_m)?;
        let grid = self.signal.default_grid();
        let scenario = BiphotonScenario::new(
            self.signal.clone(),
            grid,
            erase_graph,
            mark_graph,
            self.geometry.clone(),
            emission,
            schedule,
        )?;
        let l_s = self.geometry.signal_path_m;
        let d = self.geometry.remote_distance_m;
        self.model.validate(l_s, d)?;
        let kappa = self.model.kappa(l_s, d)?;
        Ok(BuiltScenario {
            scenario,
            model: self.model.clone(),
            kappa,
        })
    }
}

impl ScenarioConfig {
    /// Runs the scenario and returns its events in stream order.
    pub fn simulate(&self) -> Result<Vec<DetectionEvent>, ConfigError> {
        let built = self.build()?;
        let mut events = run_scenario(&built.scenario, &built.model, self.seed, self.n_emissions)?;
        sort_events(&mut events);
        Ok(events)
    }
}

/// Stream order: by time, then emission index, then detector id.
pub fn sort_events(events: &mut [DetectionEvent]) {
    events.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.emission_index.cmp(&b.emission_index))
            .then_with(|| a.detector.cmp(&b.detector))
    });
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ScenarioConfig::from_toml_str(&src)
}

/// Resolves a `--config` argument: an existing file path, else a preset name
/// looked up in the preset directory and then among the built-in presets.
pub fn resolve_config(arg: &str) -> Result<ScenarioConfig, ConfigError> {
    let path = PathBuf::from(arg);
    if path.is_file() {
        return parse_scenario(&path);
    }
    let src = preset_source(arg)?;
    ScenarioConfig::from_toml_str(&src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_builds() {
        for name in preset_names() {
            let cfg = resolve_config(&name).unwrap_or_else(|e| panic!("{name}: {e}"));
            cfg.build().unwrap();
        }
    }

    #[test]
    fn canonical_round_trip() {
        for name in preset_names() {
            let cfg = resolve_config(&name).unwrap();
            let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(cfg, again, "{name}");
            assert_eq!(cfg.hash(), again.hash());
            let from_json = ScenarioConfig::from_json_str(&cfg.canonical_json()).unwrap();
            assert_eq!(cfg, from_json, "{name}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = resolve_config("kim1999_full").unwrap();
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn semantic_errors_surface() {
        let src = preset_source("remote_trigger")
            .unwrap()
            .replace("kind = \"FUTURE_HS\"", "kind = \"HYPERWAVE\"");
        let err = ScenarioConfig::from_toml_str(&src).unwrap_err();
        assert!(err.to_string().contains("tau_c_s"), "{err}");
    }
}

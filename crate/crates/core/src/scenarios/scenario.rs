use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EmissionPlan, ScenarioError, Setting, TriggerSchedule};
use crate::optics::{
    transfer_coefficients, validate_unitarity, Grid, JointDensity, PathGraph, SignalArmModel,
    TransferCoefficients,
};
use crate::SPEED_OF_LIGHT;

/// Lab-frame placement of the detectors. Positions are in metres relative to
/// the SPDC source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Optical path from the source to D0.
    pub signal_path_m: f64,
    pub d0_position_m: [f64; 3],
    #[serde(default)]
    pub detector_positions_m: BTreeMap<String, [f64; 3]>,
    /// Distance from the lab to the remote (switchable) idler apparatus.
    #[serde(default)]
    pub remote_distance_m: f64,
}

impl Geometry {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.signal_path_m >= 0.0 && self.signal_path_m.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "signal_path_m must be >= 0, got {}",
                self.signal_path_m
            )));
        }
        if !(self.remote_distance_m >= 0.0 && self.remote_distance_m.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "remote_distance_m must be >= 0, got {}",
                self.remote_distance_m
            )));
        }
        let finite = |p: &[f64; 3]| p.iter().all(|v| v.is_finite());
        if !finite(&self.d0_position_m) || !self.detector_positions_m.values().all(finite) {
            return Err(ScenarioError::Invalid("positions must be finite".into()));
        }
        Ok(())
    }
}

/// Everything needed to generate detection events except the model law.
#[derive(Debug, Clone)]
pub struct BiphotonScenario {
    pub signal: SignalArmModel,
    pub grid: Grid,
    pub erase_graph: PathGraph,
    /// Idler graph while the remote setting is MARK; `None` when the layout
    /// does not switch.
    pub mark_graph: Option<PathGraph>,
    pub geometry: Geometry,
    pub emission: EmissionPlan,
    pub schedule: TriggerSchedule,
    erase: JointDensity,
    mark: Option<JointDensity>,
}

impl BiphotonScenario {
    pub fn new(
        signal: SignalArmModel,
        grid: Grid,
        erase_graph: PathGraph,
        mark_graph: Option<PathGraph>,
        geometry: Geometry,
        emission: EmissionPlan,
        schedule: TriggerSchedule,
    ) -> Result<Self, ScenarioError> {
        geometry.validate()?;
        let density = |g: &PathGraph| -> Result<JointDensity, ScenarioError> {
            let tc = transfer_coefficients(g);
            validate_unitarity(&tc).into_result()?;
            Ok(JointDensity::new(&signal, &tc, grid)?)
        };
        let erase = density(&erase_graph)?;
        let mark = mark_graph.as_ref().map(density).transpose()?;
        Ok(BiphotonScenario {
            signal,
            grid,
            erase_graph,
            mark_graph,
            geometry,
            emission,
            schedule,
            erase,
            mark,
        })
    }

    pub fn signal_delay_s(&self) -> f64 {
        self.geometry.signal_path_m / SPEED_OF_LIGHT
    }

    /// Joint density of the idler graph in force for `setting`.
    pub fn density(&self, setting: Setting) -> &JointDensity {
        match (setting, &self.mark) {
            (Setting::Mark, Some(m)) => m,
            _ => &self.erase,
        }
    }

    pub fn coefficients(&self, setting: Setting) -> &TransferCoefficients {
        self.density(setting).coefficients()
    }

    /// Coefficient tables of every graph in the scenario (ERASE first).
    pub fn all_coefficients(&self) -> Vec<&TransferCoefficients> {
        let mut v = vec![self.erase.coefficients()];
        if let Some(m) = &self.mark {
            v.push(m.coefficients());
        }
        v
    }

    /// Arrival delay of an idler detector in whichever graph contains it.
    pub fn idler_delay(&self, detector: &str) -> Option<f64> {
        self.all_coefficients()
            .iter()
            .find_map(|tc| tc.delay(detector))
    }

    /// Coefficients of the graph that contains `detector`.
    pub fn coefficients_for(&self, detector: &str) -> Option<&TransferCoefficients> {
        self.all_coefficients()
            .into_iter()
            .find(|tc| tc.index_of(detector).is_some())
    }
}

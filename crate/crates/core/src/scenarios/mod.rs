//! Timestamped detection-event generation under standard QM and under the
//! hypersurface-coupling conjectures, driven by a remote trigger schedule.

mod emission;
mod model;
mod sample;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::OpticsError;
use crate::SPEED_OF_LIGHT;

pub use emission::{emission_rng, EmissionPlan, Timing};
pub use model::{effective_setting, ConjectureModel, MarkingProbability, ModelKind};
pub use sample::{
    run_scenario, run_scenario_chunked, sample_emission, DetectionEvent, Emission, D0,
};
pub use scenario::{BiphotonScenario, Geometry};

/// Remote idler-arm setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "ERASE")]
    Erase,
    #[serde(rename = "MARK")]
    Mark,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Erase => "ERASE",
            Setting::Mark => "MARK",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ERASE" => Some(Setting::Erase),
            "MARK" => Some(Setting::Mark),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleChange {
    pub t_send_s: f64,
    pub setting: Setting,
}

/// Remote setting changes, each sent from the lab at `t_send_s` by a signal
/// travelling at `c` to a screen `remote_distance_m` away. The initial
/// setting is ERASE.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriggerSchedule {
    pub changes: Vec<ScheduleChange>,
    pub remote_distance_m: f64,
}

impl TriggerSchedule {
    pub fn new(
        changes: Vec<ScheduleChange>,
        remote_distance_m: f64,
    ) -> Result<Self, ScenarioError> {
        if !(remote_distance_m >= 0.0 && remote_distance_m.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "remote distance must be non-negative, got {remote_distance_m}"
            )));
        }
        for w in changes.windows(2) {
            if w[1].t_send_s <= w[0].t_send_s {
                return Err(ScenarioError::Invalid(format!(
                    "schedule times must be strictly increasing ({} then {})",
                    w[0].t_send_s, w[1].t_send_s
                )));
            }
        }
        if changes.iter().any(|c| !c.t_send_s.is_finite()) {
            return Err(ScenarioError::Invalid(
                "schedule times must be finite".into(),
            ));
        }
        Ok(TriggerSchedule {
            changes,
            remote_distance_m,
        })
    }

    /// Light travel time to the remote screen.
    pub fn travel_time_s(&self) -> f64 {
        self.remote_distance_m / SPEED_OF_LIGHT
    }

    /// First change, if any.
    pub fn first_send(&self) -> Option<f64> {
        self.changes.first().map(|c| c.t_send_s)
    }
}

/// Setting in force at the remote screen at lab time `t`.
pub fn setting_at(schedule: &TriggerSchedule, t: f64) -> Setting {
    let travel = schedule.travel_time_s();
    // Changes are sorted, so the arrival times are too.
    let n = schedule
        .changes
        .partition_point(|c| c.t_send_s + travel <= t);
    if n == 0 {
        Setting::Erase
    } else {
        schedule.changes[n - 1].setting
    }
}

/// Builds a schedule that holds MARK for every `1` slot and ERASE for every
/// `0` slot, starting at `start_s`.
pub fn encode_message(
    bits: &str,
    symbol_period_s: f64,
    start_s: f64,
    remote_distance_m: f64,
) -> Result<TriggerSchedule, ScenarioError> {
    if bits.is_empty() {
        return Err(ScenarioError::EmptyMessage);
    }
    if !(symbol_period_s > 0.0 && symbol_period_s.is_finite()) {
        return Err(ScenarioError::Invalid(format!(
            "symbol period must be positive, got {symbol_period_s}"
        )));
    }
    let mut current = Setting::Erase;
    let mut changes = Vec::new();
    for (i, b) in bits.chars().enumerate() {
        let want = match b {
            '0' => Setting::Erase,
            '1' => Setting::Mark,
            other => {
                return Err(ScenarioError::Invalid(format!(
                    "message bit `{other}` is not 0 or 1"
                )))
            }
        };
        if want != current {
            changes.push(ScheduleChange {
                t_send_s: start_s + symbol_period_s * i as f64,
                setting: want,
            });
            current = want;
        }
    }
    TriggerSchedule::new(changes, remote_distance_m)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error("{0}")]
    Invalid(String),
    #[error("message has no bits")]
    EmptyMessage,
    #[error("QM baseline has no effective-setting law")]
    BaselineHasNoEffectiveSetting,
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = SPEED_OF_LIGHT;

    fn change(t: f64, s: Setting) -> ScheduleChange {
        ScheduleChange {
            t_send_s: t,
            setting: s,
        }
    }

    #[test]
    fn empty_schedule_erases() {
        let s = TriggerSchedule::default();
        for t in [-1.0, 0.0, 1e9] {
            assert_eq!(setting_at(&s, t), Setting::Erase);
        }
    }

    #[test]
    fn one_light_second_away() {
        let s = TriggerSchedule::new(vec![change(0.0, Setting::Mark)], C).unwrap();
        assert_eq!(setting_at(&s, 0.999_999), Setting::Erase);
        assert_eq!(setting_at(&s, 1.0), Setting::Mark);
        assert_eq!(setting_at(&s, 5.0), Setting::Mark);
    }

    #[test]
    fn both_edges_shift() {
        let s = TriggerSchedule::new(
            vec![change(0.0, Setting::Mark), change(2.0, Setting::Erase)],
            C,
        )
        .unwrap();
        for (t, want) in [
            (0.5, Setting::Erase),
            (1.0, Setting::Mark),
            (2.9, Setting::Mark),
            (3.0, Setting::Erase),
            (10.0, Setting::Erase),
        ] {
            assert_eq!(setting_at(&s, t), want, "t = {t}");
        }
    }

    #[test]
    fn rejects_unsorted_schedule() {
        let err = TriggerSchedule::new(
            vec![change(1.0, Setting::Mark), change(1.0, Setting::Erase)],
            0.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn message_encoding() {
        let s = encode_message("10", 1.0, 0.0, 0.0).unwrap();
        assert_eq!(
            s.changes,
            vec![change(0.0, Setting::Mark), change(1.0, Setting::Erase)]
        );

        assert!(encode_message("0000", 1.0, 0.0, 0.0)
            .unwrap()
            .changes
            .is_empty());

        let s = encode_message("101", 0.5, 0.0, 0.0).unwrap();
        let times: Vec<f64> = s.changes.iter().map(|c| c.t_send_s).collect();
        assert_eq!(times, [0.0, 0.5, 1.0]);

        assert_eq!(
            encode_message("", 1.0, 0.0, 0.0).unwrap_err(),
            ScenarioError::EmptyMessage
        );
        assert!(encode_message("12", 1.0, 0.0, 0.0).is_err());
        assert!(encode_message("1", 0.0, 0.0, 0.0).is_err());
    }
}

//! Minkowski interval bookkeeping and the causal audit of a detector layout.
//!
//! Every idler detection of one representative emission is classified
//! against the D0 detection of the same emission. A layout in which an idler
//! detection lies strictly inside D0's future light cone lets the D0 observer
//! act on the idler's setting before it happens; such layouts are flagged as
//! `paradox_topology`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenarios::BiphotonScenario;
use crate::SPEED_OF_LIGHT;

/// Default half-width of the lightlike band, seconds.
pub const DEFAULT_LIGHTLIKE_EPSILON_S: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    pub t: f64,
    pub pos: [f64; 3],
    pub label: String,
}

impl SpacetimeEvent {
    pub fn new(label: impl Into<String>, t: f64, pos: [f64; 3]) -> Self {
        SpacetimeEvent {
            t,
            pos,
            label: label.into(),
        }
    }

    /// Coordinates in a frame moving with velocity `v` (m/s) relative to the
    /// lab.
    pub fn boosted(&self, v: [f64; 3]) -> SpacetimeEvent {
        let c = SPEED_OF_LIGHT;
        let v2 = v.iter().map(|x| x * x).sum::<f64>();
        if v2 == 0.0 {
            return self.clone();
        }
        let gamma = 1.0 / (1.0 - v2 / (c * c)).sqrt();
        let vx = dot(v, self.pos);
        let t = gamma * (self.t - vx / (c * c));
        let k = (gamma - 1.0) * vx / v2 - gamma * self.t;
        let pos = [
            self.pos[0] + k * v[0],
            self.pos[1] + k * v[1],
            self.pos[2] + k * v[2],
        ];
        SpacetimeEvent {
            t,
            pos,
            label: self.label.clone(),
        }
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    TimelikeFuture,
    TimelikePast,
    Lightlike,
    Spacelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalClass {
    pub kind: IntervalKind,
    /// `Δt² − |Δx|²/c²`, seconds².
    pub squared_interval: f64,
}

/// Squared interval from `a` to `b`.
pub fn squared_interval(a: &SpacetimeEvent, b: &SpacetimeEvent) -> f64 {
    let dt = b.t - a.t;
    let dx = [
        b.pos[0] - a.pos[0],
        b.pos[1] - a.pos[1],
        b.pos[2] - a.pos[2],
    ];
    dt * dt - dot(dx, dx) / (SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

/// Classifies `other` relative to `reference`.
///
/// The lightlike band is measured as arrival-time mismatch,
/// `||Δt| − |Δx|/c| ≤ epsilon_s`.
pub fn classify_interval(
    reference: &SpacetimeEvent,
    other: &SpacetimeEvent,
    epsilon_s: f64,
) -> IntervalClass {
    assert!(epsilon_s >= 0.0, "epsilon_s must be non-negative");
    let dt = other.t - reference.t;
    let dx = [
        other.pos[0] - reference.pos[0],
        other.pos[1] - reference.pos[1],
        other.pos[2] - reference.pos[2],
    ];
    let light_time = dot(dx, dx).sqrt() / SPEED_OF_LIGHT;
    let s2 = dt * dt - light_time * light_time;
    let kind = if (dt.abs() - light_time).abs() <= epsilon_s {
        IntervalKind::Lightlike
    } else if dt.abs() > light_time {
        if dt > 0.0 {
            IntervalKind::TimelikeFuture
        } else {
            IntervalKind::TimelikePast
        }
    } else {
        IntervalKind::Spacelike
    };
    IntervalClass {
        kind,
        squared_interval: s2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVerdict {
    /// Some idler detection is inside D0's future light cone.
    ParadoxTopology,
    /// None inside, at least one on the cone.
    OnCone,
    OutsideCone,
}

impl AuditVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditVerdict::ParadoxTopology => "paradox_topology",
            AuditVerdict::OnCone => "on_cone",
            AuditVerdict::OutsideCone => "outside_cone",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub event: SpacetimeEvent,
    pub class: IntervalClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalAuditReport {
    pub reference: SpacetimeEvent,
    pub entries: Vec<AuditEntry>,
    pub verdict: AuditVerdict,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("no position configured for detector `{0}`")]
    MissingGeometry(String),
}

/// Verdict from a set of classified idler detections.
pub fn verdict_for(classes: impl IntoIterator<Item = IntervalKind>) -> AuditVerdict {
    let mut on_cone = false;
    for k in classes {
        match k {
            IntervalKind::TimelikeFuture => return AuditVerdict::ParadoxTopology,
            IntervalKind::Lightlike => on_cone = true,
            _ => {}
        }
    }
    if on_cone {
        AuditVerdict::OnCone
    } else {
        AuditVerdict::OutsideCone
    }
}

/// Audits the scenario geometry for one emission at `t = 0`.
///
/// Covers the idler detectors of both the ERASE and the MARK graph.
pub fn audit_topology(
    scenario: &BiphotonScenario,
    epsilon_s: f64,
) -> Result<CausalAuditReport, AuditError> {
    let geo = &scenario.geometry;
    let reference = SpacetimeEvent::new("D0", scenario.signal_delay_s(), geo.d0_position_m);
    let mut entries = Vec::new();
    for tc in scenario.all_coefficients() {
        for (k, det) in tc.detectors().iter().enumerate() {
            if entries.iter().any(|e: &AuditEntry| &e.event.label == det) {
                continue;
            }
            let pos = *geo
                .detector_positions_m
                .get(det)
                .ok_or_else(|| AuditError::MissingGeometry(det.clone()))?;
            let event = SpacetimeEvent::new(det.clone(), tc.delay_at(k), pos);
            let class = classify_interval(&reference, &event, epsilon_s);
            entries.push(AuditEntry { event, class });
        }
    }
    let verdict = verdict_for(entries.iter().map(|e| e.class.kind));
    Ok(CausalAuditReport {
        reference,
        entries,
        verdict,
    })
}

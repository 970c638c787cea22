use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{setting_at, ScenarioError, Setting, TriggerSchedule};

/// Event-generation law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Standard quantum mechanics; the D0 marginal never depends on the
    /// remote setting.
    #[serde(rename = "QM_BASELINE")]
    QmBaseline,
    /// D0 couples to the idler's future on the light cone (κ = +1).
    #[serde(rename = "FUTURE_HS")]
    FutureHs,
    /// D0 couples to the idler's lab-frame present (κ = 0).
    #[serde(rename = "PRESENT_HS")]
    PresentHs,
    /// D0 couples to a tilted past slice (κ < 0).
    #[serde(rename = "PAST_HS")]
    PastHs,
    /// Inter-emission coupling with time scale `tau_c_s`.
    #[serde(rename = "HYPERWAVE")]
    Hyperwave,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::QmBaseline,
        ModelKind::FutureHs,
        ModelKind::PresentHs,
        ModelKind::PastHs,
        ModelKind::Hyperwave,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::QmBaseline => "QM_BASELINE",
            ModelKind::FutureHs => "FUTURE_HS",
            ModelKind::PresentHs => "PRESENT_HS",
            ModelKind::PastHs => "PAST_HS",
            ModelKind::Hyperwave => "HYPERWAVE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Fraction of ERASE-effective emissions whose D0 pattern is nevertheless
/// collapsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarkingProbability {
    Constant(f64),
    /// Piecewise constant: each `[t_s, p]` holds from `t_s` until the next
    /// entry. The first value also covers earlier times.
    Curve(Vec<[f64; 2]>),
}

impl Default for MarkingProbability {
    fn default() -> Self {
        MarkingProbability::Constant(0.0)
    }
}

impl MarkingProbability {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            MarkingProbability::Constant(p) => *p,
            MarkingProbability::Curve(points) => {
                let n = points.partition_point(|p| p[0] <= t);
                points[n.saturating_sub(1)][1]
            }
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            MarkingProbability::Constant(p) if !in_range(*p) => Err(ScenarioError::Invalid(
                format!("p_mark must be in [0, 1], got {p}"),
            )),
            MarkingProbability::Curve(points) => {
                if points.is_empty() {
                    return Err(ScenarioError::Invalid("marking curve is empty".into()));
                }
                if let Some(p) = points.iter().find(|p| !in_range(p[1])) {
                    return Err(ScenarioError::Invalid(format!(
                        "p_mark must be in [0, 1], got {}",
                        p[1]
                    )));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(ScenarioError::Invalid(
                        "marking curve times must increase".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn is_default_marking(m: &MarkingProbability) -> bool {
    *m == MarkingProbability::Constant(0.0)
}

fn default_visibility() -> f64 {
    1.0
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjectureModel {
    pub kind: ModelKind,
    /// Overrides the kind's hypersurface tilt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "default_visibility", skip_serializing_if = "is_one")]
    pub conjectured_visibility: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c_s: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub jitter_sigma_s: f64,
    #[serde(default, rename = "p_mark", skip_serializing_if = "is_default_marking")]
    pub marking_probability: MarkingProbability,
    /// Phase offset of the conjectured ERASE fringes.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub fringe_phase_rad: f64,
    /// PAST_HS: signal and idler speeds as fractions of `c`, from which the
    /// tilt is derived when `kappa` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_speed_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idler_speed_ratio: Option<f64>,
}

impl ConjectureModel {
    pub fn new(kind: ModelKind) -> Self {
        ConjectureModel {
            kind,
            kappa: None,
            conjectured_visibility: 1.0,
            tau_c_s: None,
            jitter_sigma_s: 0.0,
            marking_probability: MarkingProbability::default(),
            fringe_phase_rad: 0.0,
            signal_speed_ratio: None,
            idler_speed_ratio: None,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn is_baseline(&self) -> bool {
        self.kind == ModelKind::QmBaseline
    }

    /// Hypersurface tilt κ. For PAST_HS without an explicit value,
    /// `κ = −(L_s/v_s − L_i/v_i)·c/D` with `L_i = D`.
    pub fn kappa(&self, signal_path_m: f64, remote_distance_m: f64) -> Result<f64, ScenarioError> {
        if let Some(k) = self.kappa {
            return Ok(k);
        }
        Ok(match self.kind {
            ModelKind::QmBaseline | ModelKind::PresentHs | ModelKind::Hyperwave => 0.0,
            ModelKind::FutureHs => 1.0,
            ModelKind::PastHs => match (self.signal_speed_ratio, self.idler_speed_ratio) {
                (Some(vs), Some(vi)) => {
                    if !(remote_distance_m > 0.0) {
                        return Err(ScenarioError::Invalid(
                            "PAST_HS speed derivation needs a positive remote distance".into(),
                        ));
                    }
                    let kappa_prime =
                        (signal_path_m / vs - remote_distance_m / vi) / remote_distance_m;
                    -kappa_prime
                }
                _ => {
                    return Err(ScenarioError::Invalid(
                        "PAST_HS needs either kappa or both arm speed ratios".into(),
                    ))
                }
            },
        })
    }

    pub fn validate(
        &self,
        signal_path_m: f64,
        remote_distance_m: f64,
    ) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        if !(0.0..=1.0).contains(&self.conjectured_visibility) {
            return invalid(format!(
                "conjectured_visibility must be in [0, 1], got {}",
                self.conjectured_visibility
            ));
        }
        if !(self.jitter_sigma_s >= 0.0 && self.jitter_sigma_s.is_finite()) {
            return invalid(format!(
                "jitter_sigma_s must be >= 0, got {}",
                self.jitter_sigma_s
            ));
        }
        if !self.fringe_phase_rad.is_finite() {
            return invalid("fringe_phase_rad must be finite".into());
        }
        for (name, v) in [
            ("signal_speed_ratio", self.signal_speed_ratio),
            ("idler_speed_ratio", self.idler_speed_ratio),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return invalid(format!("{name} must be > 0, got {v}"));
                }
            }
        }
        self.marking_probability.validate()?;
        match (self.kind, self.tau_c_s) {
            (ModelKind::Hyperwave, None) => return invalid("HYPERWAVE needs tau_c_s".into()),
            (_, Some(t)) if !(t > 0.0 && t.is_finite()) => {
                return invalid(format!("tau_c_s must be > 0, got {t}"))
            }
            _ => {}
        }
        let k = self.kappa(signal_path_m, remote_distance_m)?;
        if !(-1.0..=1.0).contains(&k) {
            return invalid(format!("kappa must be in [-1, 1], got {k}"));
        }
        if self.kind == ModelKind::PastHs && k >= 0.0 {
            return invalid(format!("PAST_HS needs kappa < 0, got {k}"));
        }
        Ok(())
    }

    /// Visibility multiplier for an emission `tau_s` after its predecessor.
    pub fn hyperwave_factor(&self, tau_s: f64) -> f64 {
        match (self.kind, self.tau_c_s) {
            (ModelKind::Hyperwave, Some(tc)) => (-tau_s / tc).exp(),
            _ => 1.0,
        }
    }
}

/// Remote setting that governs a D0 detection at `t_signal_detection` under a
/// conjecture model: `setting_at(t_det + κ·D/c + jitter)`.
///
/// Draws exactly one standard normal from `rng`.
pub fn effective_setting<R: Rng + ?Sized>(
    model: &ConjectureModel,
    kappa: f64,
    schedule: &TriggerSchedule,
    t_signal_detection: f64,
    rng: &mut R,
) -> Result<Setting, ScenarioError> {
    if model.is_baseline() {
        return Err(ScenarioError::BaselineHasNoEffectiveSetting);
    }
    let z: f64 = rng.sample(StandardNormal);
    let t_eff = t_signal_detection + kappa * schedule.travel_time_s() + model.jitter_sigma_s * z;
    Ok(setting_at(schedule, t_eff))
}

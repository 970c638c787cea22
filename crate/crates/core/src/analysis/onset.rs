use serde::{Deserialize, Serialize};

use super::{
    fit_fringes, projected_visibility_with_error, AnalysisError, Binning, FitOptions,
    FringeEnvelope,
};
use crate::scenarios::{DetectionEvent, ModelKind, TriggerSchedule};

/// Which onset hypothesis a detected changepoint supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OnsetVerdict {
    #[serde(rename = "FUTURE_HS")]
    FutureHs,
    #[serde(rename = "PRESENT_HS")]
    PresentHs,
    #[serde(rename = "PAST_HS")]
    PastHs,
    #[serde(rename = "NO_CHANGE")]
    NoChange,
}

impl OnsetVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            OnsetVerdict::FutureHs => "FUTURE_HS",
            OnsetVerdict::PresentHs => "PRESENT_HS",
            OnsetVerdict::PastHs => "PAST_HS",
            OnsetVerdict::NoChange => "NO_CHANGE",
        }
    }

    /// Verdict a correct detector should give for data from `kind`.
    pub fn expected_for(kind: ModelKind) -> OnsetVerdict {
        match kind {
            ModelKind::FutureHs => OnsetVerdict::FutureHs,
            ModelKind::PresentHs | ModelKind::Hyperwave => OnsetVerdict::PresentHs,
            ModelKind::PastHs => OnsetVerdict::PastHs,
            ModelKind::QmBaseline => OnsetVerdict::NoChange,
        }
    }
}

/// A predicted D0 onset time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetHypothesis {
    pub verdict: OnsetVerdict,
    pub onset_s: f64,
}

/// Onsets `t_send`, `t_send + D/c` and `t_send + (1 + κ′)·D/c`.
pub fn predicted_onsets(t_send: f64, travel_s: f64, past_kappa_prime: f64) -> Vec<OnsetHypothesis> {
    vec![
        OnsetHypothesis {
            verdict: OnsetVerdict::FutureHs,
            onset_s: t_send,
        },
        OnsetHypothesis {
            verdict: OnsetVerdict::PresentHs,
            onset_s: t_send + travel_s,
        },
        OnsetHypothesis {
            verdict: OnsetVerdict::PastHs,
            onset_s: t_send + (1.0 + past_kappa_prime) * travel_s,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetOptions {
    pub window_emissions: usize,
    /// CUSUM allowance, in noise standard deviations.
    pub cusum_k: f64,
    /// CUSUM alarm threshold, in noise standard deviations.
    pub cusum_h: f64,
}

impl Default for OnsetOptions {
    fn default() -> Self {
        OnsetOptions {
            window_emissions: 500,
            cusum_k: 1.0,
            cusum_h: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPoint {
    pub t_start: f64,
    pub t_end: f64,
    pub n: usize,
    /// Visibility projected on the reference phase.
    pub visibility: f64,
    /// Counting-noise standard error of `visibility`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetEstimate {
    /// Changepoint time, refined to a single event; `None` for NO_CHANGE.
    pub t_hat: Option<f64>,
    /// Half-width of the onset uncertainty (one window duration).
    pub ci: f64,
    pub model_verdict: OnsetVerdict,
    pub hypotheses: Vec<OnsetHypothesis>,
    pub series: Vec<VisibilityPoint>,
    pub reference_phase: f64,
    pub pre_change_level: f64,
    pub noise_sd: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Tumbling-window visibility series of time-sorted D0 events.
pub fn visibility_series(
    d0: &[DetectionEvent],
    envelope: &FringeEnvelope,
    period: f64,
    phase: f64,
    binning: Binning,
    window: usize,
) -> Result<Vec<VisibilityPoint>, AnalysisError> {
    d0.chunks_exact(window.max(1))
        .map(|w| {
            let h = binning.histogram(w.iter().filter_map(|e| e.x))?;
            let (v, se) = projected_visibility_with_error(&h, envelope, period, phase)
                .unwrap_or((0.0, f64::NAN));
            Ok(VisibilityPoint {
                t_start: w[0].t,
                t_end: w[w.len() - 1].t,
                n: w.len(),
                visibility: v,
                std_error: se,
            })
        })
        .collect()
}

/// Two-sided CUSUM; returns `(alarm index, changepoint index)`.
pub fn cusum(z: &[f64], k: f64, h: f64) -> Option<(usize, usize)> {
    let (mut up, mut down) = (0.0f64, 0.0f64);
    let (mut last_up_zero, mut last_down_zero) = (None, None);
    for (i, &v) in z.iter().enumerate() {
        up = (up + v - k).max(0.0);
        down = (down - v - k).max(0.0);
        if up == 0.0 {
            last_up_zero = Some(i);
        }
        if down == 0.0 {
            last_down_zero = Some(i);
        }
        if up > h {
            return Some((i, last_up_zero.map_or(0, |j| j + 1)));
        }
        if down > h {
            return Some((i, last_down_zero.map_or(0, |j| j + 1)));
        }
    }
    None
}

/// Index of the best single mean shift in `scores` (least-squares two-level
/// fit); the returned index is the first element of the second level.
fn best_split(scores: &[f64]) -> Option<usize> {
    let n = scores.len();
    if n < 2 {
        return None;
    }
    let total: f64 = scores.iter().sum();
    let mut left = 0.0;
    let mut best: Option<(f64, usize)> = None;
    for k in 1..n {
        left += scores[k - 1];
        let (nl, nr) = (k as f64, (n - k) as f64);
        let d = left / nl - (total - left) / nr;
        let gain = d * d * nl * nr;
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, k));
        }
    }
    best.map(|(_, k)| k)
}

/// Moves a window-level changepoint to event resolution. Each event is scored
/// by its fringe projection and the best mean shift is sought from the window
/// before `cp` to the window after `alarm`.
#[allow(clippy::too_many_arguments)]
fn refine_changepoint(
    d0: &[DetectionEvent],
    envelope: &FringeEnvelope,
    period: f64,
    phase: f64,
    window: usize,
    n_windows: usize,
    cp: usize,
    alarm: usize,
) -> Option<f64> {
    let lo = cp.saturating_sub(1) * window;
    let hi = ((alarm + 2).min(n_windows) * window).min(d0.len());
    let span = &d0[lo..hi];
    let scores: Vec<f64> = span
        .iter()
        .map(|e| {
            let x = e.x.unwrap_or(f64::NAN);
            let b = envelope.base(x);
            if !(b > 0.0) {
                return 0.0;
            }
            envelope.modulation(x) / b * (2.0 * std::f64::consts::PI * x / period + phase).cos()
        })
        .collect();
    best_split(&scores).map(|k| span[k].t)
}

/// Locates the first change in D0 fringe visibility after the first
/// scheduled toggle and maps it to the nearest hypothesis.
pub fn detect_onset(
    d0: &[DetectionEvent],
    envelope: &FringeEnvelope,
    period: f64,
    binning: Binning,
    schedule: &TriggerSchedule,
    hypotheses: &[OnsetHypothesis],
    options: OnsetOptions,
) -> Result<OnsetEstimate, AnalysisError> {
    if options.window_emissions < 500 {
        return Err(AnalysisError::Invalid(format!(
            "onset window must be >= 500 emissions, got {}",
            options.window_emissions
        )));
    }
    if d0.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(AnalysisError::Unsorted(
            "D0 stream is not time-sorted".into(),
        ));
    }
    let t_send = schedule
        .first_send()
        .ok_or_else(|| AnalysisError::Invalid("schedule has no setting change".into()))?;

    let pooled = binning.histogram(d0.iter().filter_map(|e| e.x))?;
    let reference_phase = fit_fringes(&pooled, envelope, period, FitOptions::fixed_period())
        .map(|f| f.phase)
        .unwrap_or(0.0);
    let series = visibility_series(
        d0,
        envelope,
        period,
        reference_phase,
        binning,
        options.window_emissions,
    )?;

    let mut pre: Vec<f64> = series
        .iter()
        .filter(|p| p.t_end < t_send)
        .map(|p| p.visibility)
        .collect();
    let spans = series.last().is_some_and(|p| p.t_end > t_send);
    if pre.len() < 3 || !spans {
        return Err(AnalysisError::StreamTooShort(format!(
            "need >= 3 full windows before t_send = {t_send} s and data after it ({} before)",
            pre.len()
        )));
    }
    let level = median(&mut pre);
    let pre_se: Vec<f64> = series
        .iter()
        .filter(|p| p.t_end < t_send && p.std_error.is_finite())
        .map(|p| p.std_error * p.std_error)
        .collect();
    let sd = if pre_se.is_empty() {
        f64::NAN
    } else {
        (pre_se.iter().sum::<f64>() / pre_se.len() as f64).sqrt()
    };
    let sd = if sd.is_finite() && sd > 0.0 { sd } else { 1e-9 };
    let z: Vec<f64> = series.iter().map(|p| (p.visibility - level) / sd).collect();

    // No hypothesis places the onset before the first toggle.
    let first = series
        .iter()
        .position(|p| p.t_end >= t_send)
        .unwrap_or(series.len());
    let ci = series.iter().map(|p| p.t_end - p.t_start).sum::<f64>() / series.len() as f64;
    let change =
        cusum(&z[first..], options.cusum_k, options.cusum_h).map(|(a, c)| (a + first, c + first));
    let (t_hat, verdict) = match change {
        None => (None, OnsetVerdict::NoChange),
        Some((alarm, cp)) => {
            let t = refine_changepoint(
                d0,
                envelope,
                period,
                reference_phase,
                options.window_emissions,
                series.len(),
                cp,
                alarm,
            )
            .unwrap_or(series[cp].t_start);
            let v = hypotheses
                .iter()
                .min_by(|a, b| (a.onset_s - t).abs().total_cmp(&(b.onset_s - t).abs()))
                .map_or(OnsetVerdict::NoChange, |h| h.verdict);
            (Some(t), v)
        }
    };
    Ok(OnsetEstimate {
        t_hat,
        ci,
        model_verdict: verdict,
        hypotheses: hypotheses.to_vec(),
        series,
        reference_phase,
        pre_change_level: level,
        noise_sd: sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cusum_finds_step() {
        let mut z = vec![0.3, -0.5, 0.1, 0.8, -1.0, 0.2, -0.3, 0.4];
        z.extend([-12.0, -11.0, -13.0]);
        let (alarm, cp) = cusum(&z, 1.0, 8.0).unwrap();
        assert_eq!(cp, 8);
        assert_eq!(alarm, 8);
        assert!(cusum(&z[..8], 1.0, 8.0).is_none());
    }

    #[test]
    fn cusum_upward() {
        let z = [0.0, 0.0, 0.0, 3.0, 3.0, 3.0, 3.0, 3.0];
        let (_, cp) = cusum(&z, 1.0, 8.0).unwrap();
        assert_eq!(cp, 3);
    }

    #[test]
    fn split_at_mean_shift() {
        let mut v = vec![0.5; 40];
        v.extend(vec![0.0; 25]);
        assert_eq!(best_split(&v), Some(40));
        assert_eq!(best_split(&[1.0]), None);
    }

    #[test]
    fn hypotheses_order() {
        let h = predicted_onsets(10.0, 5.0, 1.0);
        let t: Vec<f64> = h.iter().map(|h| h.onset_s).collect();
        assert_eq!(t, [10.0, 15.0, 20.0]);
    }
}

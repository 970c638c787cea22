use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::scenarios::DetectionEvent;

/// A signal detection paired with an idler detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidencePair {
    pub signal_event: DetectionEvent,
    pub idler_event: DetectionEvent,
    /// Raw `t_idler − t_signal`.
    pub dt: f64,
}

fn check_sorted(events: &[DetectionEvent], which: &str) -> Result<(), AnalysisError> {
    if let Some(i) = events.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(AnalysisError::Unsorted(format!(
            "{which} stream is not time-sorted at position {}",
            i + 1
        )));
    }
    Ok(())
}

/// Greedy one-to-one matching on delay-corrected times.
///
/// `delay` gives the known source-to-detector delay of each detector; the
/// corrected time `t − delay(detector)` estimates the emission time. Signal
/// events are visited in corrected-time order and each takes the nearest
/// unused idler within `window`.
pub fn match_coincidences(
    signal: &[DetectionEvent],
    idler: &[DetectionEvent],
    window: f64,
    delay: impl Fn(&str) -> f64,
) -> Result<Vec<CoincidencePair>, AnalysisError> {
    check_sorted(signal, "signal")?;
    check_sorted(idler, "idler")?;
    if !(window >= 0.0) {
        return Err(AnalysisError::Invalid(format!(
            "coincidence window must be >= 0, got {window}"
        )));
    }

    let corrected = |events: &[DetectionEvent]| -> Vec<(f64, usize)> {
        let mut v: Vec<(f64, usize)> = events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.t - delay(&e.detector), i))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    };
    let sig = corrected(signal);
    let idl = corrected(idler);

    let mut used = vec![false; idl.len()];
    let mut pairs = Vec::new();
    let mut start = 0;
    for &(ts, si) in &sig {
        while start < idl.len() && (used[start] || idl[start].0 < ts - window) {
            start += 1;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut j = start;
        while j < idl.len() && idl[j].0 <= ts + window {
            if !used[j] {
                let d = (idl[j].0 - ts).abs();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            j += 1;
        }
        if let Some((_, j)) = best {
            used[j] = true;
            let s = &signal[si];
            let i = &idler[idl[j].1];
            pairs.push(CoincidencePair {
                signal_event: s.clone(),
                idler_event: i.clone(),
                dt: i.t - s.t,
            });
        }
    }
    Ok(pairs)
}

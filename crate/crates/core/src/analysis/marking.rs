use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_fringes, AnalysisError, Binning, FitOptions, FringeEnvelope, Histogram};
use crate::scenarios::{emission_rng, DetectionEvent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkingEstimate {
    /// `1 − V/V_ref`.
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub visibility: f64,
    pub v_reference: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkingOptions {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for MarkingOptions {
    fn default() -> Self {
        MarkingOptions {
            resamples: 200,
            confidence: 0.95,
            seed: 0,
        }
    }
}

fn resample_counts<R: Rng>(h: &Histogram, rng: &mut R) -> Histogram {
    let n = h.total().round() as u64;
    let mut left = n;
    let mut left_p = 1.0;
    let counts = h
        .counts
        .iter()
        .map(|&k| {
            if left == 0 || k <= 0.0 {
                return 0.0;
            }
            let p = k / n as f64;
            let draw =
                Binomial::new(left, (p / left_p).clamp(0.0, 1.0)).map_or(left, |b| b.sample(rng));
            left -= draw;
            left_p -= p;
            draw as f64
        })
        .collect();
    Histogram {
        counts,
        ..h.clone()
    }
}

/// Marking fraction from the fringe visibility of a D0 histogram, with the
/// period held fixed.
pub fn estimate_marking(
    h: &Histogram,
    envelope: &FringeEnvelope,
    period: f64,
    v_reference: f64,
    options: MarkingOptions,
) -> Result<MarkingEstimate, AnalysisError> {
    if !(v_reference > 0.0) {
        return Err(AnalysisError::Invalid(format!(
            "reference visibility must be > 0, got {v_reference}"
        )));
    }
    let fit_opts = FitOptions {
        min_counts: 1.0,
        ..FitOptions::fixed_period()
    };
    let v = fit_fringes(h, envelope, period, fit_opts)?.visibility;
    let p_hat = 1.0 - v / v_reference;

    let (mut lo, mut hi) = (p_hat, p_hat);
    if options.resamples > 0 {
        let mut boot: Vec<f64> = (0..options.resamples)
            .into_par_iter()
            .map(|r| {
                let mut rng = emission_rng(options.seed, r as u64);
                let hb = resample_counts(h, &mut rng);
                fit_fringes(&hb, envelope, period, fit_opts)
                    .map_or(f64::NAN, |f| 1.0 - f.visibility / v_reference)
            })
            .filter(|p| p.is_finite())
            .collect();
        if !boot.is_empty() {
            boot.sort_by(f64::total_cmp);
            let tail = (1.0 - options.confidence) / 2.0;
            let q =
                |f: f64| boot[((f * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
            lo = q(tail).min(p_hat);
            hi = q(1.0 - tail).max(p_hat);
        }
    }
    Ok(MarkingEstimate {
        p_hat,
        ci_low: lo,
        ci_high: hi,
        visibility: v,
        v_reference,
        n: h.total().round() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub estimate: MarkingEstimate,
}

/// Splits time-sorted D0 events into `positions` equal-duration segments and
/// estimates the marking fraction in each.
pub fn marking_scan(
    d0: &[DetectionEvent],
    positions: usize,
    envelope: &FringeEnvelope,
    period: f64,
    v_reference: f64,
    binning: Binning,
    options: MarkingOptions,
) -> Result<Vec<ScanPoint>, AnalysisError> {
    if positions == 0 || d0.is_empty() {
        return Err(AnalysisError::Invalid(
            "scan needs >= 1 position and a non-empty stream".into(),
        ));
    }
    let t0 = d0.first().map_or(0.0, |e| e.t);
    let t1 = d0.last().map_or(0.0, |e| e.t);
    let span = (t1 - t0).max(f64::MIN_POSITIVE);
    let mut xs: Vec<Vec<f64>> = vec![Vec::new(); positions];
    for e in d0 {
        let k = (((e.t - t0) / span * positions as f64) as usize).min(positions - 1);
        if let Some(x) = e.x {
            xs[k].push(x);
        }
    }
    xs.iter()
        .enumerate()
        .map(|(i, v)| {
            let h = binning.histogram(v.iter().copied())?;
            let opts = MarkingOptions {
                seed: options.seed.wrapping_add(i as u64),
                ..options
            };
            Ok(ScanPoint {
                index: i,
                t_start: t0 + span * i as f64 / positions as f64,
                t_end: t0 + span * (i + 1) as f64 / positions as f64,
                estimate: estimate_marking(&h, envelope, period, v_reference, opts)?,
            })
        })
        .collect()
}

/// Index of the first point after the best single step in `values`
/// (least-squares two-level fit).
pub fn locate_step(values: &[f64]) -> Option<usize> {
    if values.len() < 2 {
        return None;
    }
    let total: f64 = values.iter().sum();
    let n = values.len() as f64;
    let mut left = 0.0;
    let mut best: Option<(f64, usize)> = None;
    for k in 1..values.len() {
        left += values[k - 1];
        let (nl, nr) = (k as f64, n - k as f64);
        let right = total - left;
        // Between-group sum of squares of the split.
        let score = left * left / nl + right * right / nr;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, k));
        }
    }
    best.map(|b| b.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_location() {
        assert_eq!(locate_step(&[0.1, 0.12, 0.08, 0.9, 0.88, 0.91]), Some(3));
        assert_eq!(locate_step(&[1.0]), None);
    }

    #[test]
    fn rejects_zero_reference() {
        let h = Histogram::new(0.0, 1.0, 32).unwrap();
        assert!(estimate_marking(
            &h,
            &FringeEnvelope::Flat,
            0.1,
            0.0,
            MarkingOptions::default()
        )
        .is_err());
    }
}

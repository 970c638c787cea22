use serde::{Deserialize, Serialize};

use super::fringe::golden_min;
use super::{fit_fringes, ks_two_sample, AnalysisError, Binning, FitOptions, FringeEnvelope};
use crate::scenarios::DetectionEvent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauBin {
    pub tau_s: f64,
    pub n: usize,
    pub visibility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauPairTest {
    pub a: usize,
    pub b: usize,
    pub statistic: f64,
    pub p_value: f64,
    /// Rejection at the Bonferroni-corrected level.
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauBinReport {
    pub bins: Vec<TauBin>,
    pub pairs: Vec<TauPairTest>,
    /// Family-wise significance level.
    pub alpha: f64,
    pub any_rejection: bool,
    /// Fitted `A` of `V(τ) = A·exp(−τ/τ_c)`.
    pub amplitude: Option<f64>,
    pub tau_c_hat: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauOptions {
    pub alpha: f64,
    pub min_events_per_bin: usize,
    /// Bins whose visibilities all stay below this carry no fringes to fit.
    pub min_fit_visibility: f64,
}

impl Default for TauOptions {
    fn default() -> Self {
        TauOptions {
            alpha: 0.01,
            min_events_per_bin: 10_000,
            min_fit_visibility: 0.05,
        }
    }
}

/// `(τ, x)` for every D0 event whose predecessor emission is in the stream.
pub fn tau_samples(d0: &[DetectionEvent]) -> Vec<(f64, f64)> {
    let mut ev: Vec<&DetectionEvent> = d0.iter().filter(|e| e.x.is_some()).collect();
    ev.sort_by_key(|e| e.emission_index);
    ev.windows(2)
        .filter(|w| w[1].emission_index == w[0].emission_index + 1)
        .map(|w| (w[1].t - w[0].t, w[1].x.unwrap_or(f64::NAN)))
        .collect()
}

/// Fits `A·exp(−τ/τ_c)` to `(τ, V)` points: `A` in closed form, `τ_c` by
/// golden section in log space.
pub fn fit_exponential_decay(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let taus: Vec<f64> = points.iter().map(|p| p.0).filter(|t| *t > 0.0).collect();
    if taus.len() < 2 {
        return None;
    }
    let lo = taus.iter().cloned().fold(f64::INFINITY, f64::min) / 100.0;
    let hi = taus.iter().cloned().fold(0.0, f64::max) * 100.0;
    let amp = |tc: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &(t, v) in points {
            let e = (-t / tc).exp();
            num += v * e;
            den += e * e;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    let ssr = |ln_tc: f64| {
        let tc = ln_tc.exp();
        let a = amp(tc);
        points
            .iter()
            .map(|&(t, v)| (v - a * (-t / tc).exp()).powi(2))
            .sum::<f64>()
    };
    let (a, b) = (lo.ln(), hi.ln());
    const SCAN: usize = 200;
    let step = (b - a) / SCAN as f64;
    let best = (0..=SCAN)
        .map(|i| a + step * i as f64)
        .min_by(|x, y| ssr(*x).total_cmp(&ssr(*y)))?;
    let ln_tc = golden_min(ssr, (best - step).max(a), (best + step).min(b), 1e-10);
    let tc = ln_tc.exp();
    Some((amp(tc), tc))
}

/// Compares D0 position distributions across inter-emission intervals.
///
/// Each sample joins the bin whose `τ` is nearest in log scale. Pairwise KS
/// tests run at `alpha / pairs`.
pub fn tau_dependence_test(
    samples: &[(f64, f64)],
    tau_bins: &[f64],
    envelope: &FringeEnvelope,
    period: f64,
    binning: Binning,
    options: TauOptions,
) -> Result<TauBinReport, AnalysisError> {
    if tau_bins.len() < 3 {
        return Err(AnalysisError::InsufficientBins(format!(
            "tau test needs >= 3 bins, got {}",
            tau_bins.len()
        )));
    }
    if tau_bins.iter().any(|t| !(*t > 0.0)) {
        return Err(AnalysisError::Invalid("tau bins must be positive".into()));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); tau_bins.len()];
    for &(tau, x) in samples {
        if !(tau > 0.0) || x.is_nan() {
            continue;
        }
        let k = (0..tau_bins.len())
            .min_by(|&i, &j| {
                (tau.ln() - tau_bins[i].ln())
                    .abs()
                    .total_cmp(&(tau.ln() - tau_bins[j].ln()).abs())
            })
            .unwrap_or(0);
        groups[k].push(x);
    }
    if let Some((i, g)) = groups
        .iter()
        .enumerate()
        .find(|(_, g)| g.len() < options.min_events_per_bin)
    {
        return Err(AnalysisError::InsufficientBins(format!(
            "tau bin {} s has {} events, need {}",
            tau_bins[i],
            g.len(),
            options.min_events_per_bin
        )));
    }

    let mut bins = Vec::with_capacity(groups.len());
    for (g, &tau) in groups.iter().zip(tau_bins) {
        let h = binning.histogram(g.iter().copied())?;
        let fit = fit_fringes(&h, envelope, period, FitOptions::fixed_period())?;
        bins.push(TauBin {
            tau_s: tau,
            n: g.len(),
            visibility: fit.visibility,
        });
    }

    let n_pairs = groups.len() * (groups.len() - 1) / 2;
    let level = options.alpha / n_pairs as f64;
    let mut pairs = Vec::with_capacity(n_pairs);
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let r = ks_two_sample(&groups[a], &groups[b])?;
            pairs.push(TauPairTest {
                a,
                b,
                statistic: r.statistic,
                p_value: r.p_value,
                reject: r.p_value < level,
            });
        }
    }

    let points: Vec<(f64, f64)> = bins.iter().map(|b| (b.tau_s, b.visibility)).collect();
    let has_fringes = bins
        .iter()
        .any(|b| b.visibility >= options.min_fit_visibility);
    let fitted = if has_fringes {
        fit_exponential_decay(&points)
    } else {
        None
    };
    Ok(TauBinReport {
        any_rejection: pairs.iter().any(|p| p.reject),
        bins,
        pairs,
        alpha: options.alpha,
        amplitude: fitted.map(|f| f.0),
        tau_c_hat: fitted.map(|f| f.1),
    })
}

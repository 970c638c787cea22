use serde::{Deserialize, Serialize};

use super::{fit_fringes, AnalysisError, Binning, FitOptions, FringeEnvelope};
use crate::scenarios::DetectionEvent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOptions {
    pub symbol_period_s: f64,
    /// Send time of the first symbol.
    pub start_s: f64,
    pub n_bits: usize,
    /// Offset of the D0 slots from the send slots, `(1 − κ)·D/c` under a
    /// hypersurface model.
    pub shift_s: f64,
    /// Visibility below which a slot reads as `1` (MARK).
    pub threshold: f64,
    pub min_slot_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotDecode {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub n: usize,
    pub visibility: f64,
    pub bit: char,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedMessage {
    pub bits: String,
    pub slots: Vec<SlotDecode>,
    pub bit_errors: Option<usize>,
    pub ber: Option<f64>,
    /// 95% Wilson interval on the bit error rate.
    pub ber_ci: Option<(f64, f64)>,
}

fn wilson(k: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Reads one bit per symbol slot from D0 fringe visibility.
pub fn decode_message(
    d0: &[DetectionEvent],
    envelope: &FringeEnvelope,
    period: f64,
    binning: Binning,
    options: DecodeOptions,
    truth: Option<&str>,
) -> Result<DecodedMessage, AnalysisError> {
    if options.n_bits == 0 || !(options.symbol_period_s > 0.0) {
        return Err(AnalysisError::Invalid(
            "decode needs >= 1 bit and a positive symbol period".into(),
        ));
    }
    if let Some(t) = truth {
        if t.chars().count() != options.n_bits || t.chars().any(|c| c != '0' && c != '1') {
            return Err(AnalysisError::Invalid(format!(
                "ground truth `{t}` is not a {}-bit binary string",
                options.n_bits
            )));
        }
    }
    let first = options.start_s + options.shift_s;
    let last = first + options.symbol_period_s * options.n_bits as f64;
    if d0
        .last()
        .is_none_or(|e| e.t < last - options.symbol_period_s)
        || d0
            .first()
            .is_none_or(|e| e.t > first + options.symbol_period_s)
    {
        return Err(AnalysisError::StreamTooShort(format!(
            "stream does not cover symbol slots [{first}, {last}) s"
        )));
    }

    let mut xs: Vec<Vec<f64>> = vec![Vec::new(); options.n_bits];
    for e in d0 {
        let slot = ((e.t - first) / options.symbol_period_s).floor();
        if slot >= 0.0 && (slot as usize) < options.n_bits {
            if let Some(x) = e.x {
                xs[slot as usize].push(x);
            }
        }
    }
    let fit_opts = FitOptions {
        min_counts: 1.0,
        ..FitOptions::fixed_period()
    };
    let mut slots = Vec::with_capacity(options.n_bits);
    for (i, v) in xs.iter().enumerate() {
        let h = binning.histogram(v.iter().copied())?;
        let fit = fit_fringes(&h, envelope, period, fit_opts).ok();
        let visibility = fit.map_or(0.0, |f| f.visibility);
        slots.push(SlotDecode {
            index: i,
            t_start: first + options.symbol_period_s * i as f64,
            t_end: first + options.symbol_period_s * (i + 1) as f64,
            n: v.len(),
            visibility,
            bit: if visibility < options.threshold {
                '1'
            } else {
                '0'
            },
            low_confidence: v.len() < options.min_slot_events || fit.is_none(),
        });
    }
    let bits: String = slots.iter().map(|s| s.bit).collect();
    let errors = truth.map(|t| t.chars().zip(bits.chars()).filter(|(a, b)| a != b).count());
    Ok(DecodedMessage {
        ber: errors.map(|e| e as f64 / options.n_bits as f64),
        ber_ci: errors.map(|e| wilson(e, options.n_bits)),
        bit_errors: errors,
        bits,
        slots,
    })
}

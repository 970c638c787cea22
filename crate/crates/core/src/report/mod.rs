//! End-to-end analysis of an event stream and the files it is written to.
//!
//! [`analyze`] depends only on the events and the scenario config embedded in
//! the stream, so re-analysing a stream file reproduces the same report.

pub mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    decode_message, detect_onset, estimate_marking, estimate_mutual_information, fit_fringes,
    fitted_counts, ks_two_sample, locate_step, marking_scan, match_coincidences, peak_positions,
    phase_difference, predicted_onsets, tau_dependence_test, tau_samples, Binning, CoincidencePair,
    DecodeOptions, DecodedMessage, FitOptions, FringeEnvelope, FringeFit, Histogram, KsResult,
    MIEstimate, MarkingEstimate, MarkingOptions, MiOptions, OnsetEstimate, OnsetOptions,
    PeakOptions, ScanPoint, TauBinReport, TauOptions,
};
use crate::config::{ConfigError, ScenarioConfig};
use crate::scenarios::{DetectionEvent, Setting};
use crate::spacetime::{audit_topology, CausalAuditReport};
use crate::SPEED_OF_LIGHT;

use svg::{Plot, Series, Style};

/// Slots with fewer D0 events are decoded but flagged.
const MIN_SLOT_EVENTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceSummary {
    pub window_ns: f64,
    pub signal_events: usize,
    pub idler_events: usize,
    pub pairs: usize,
    pub per_detector: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorFringe {
    pub detector: String,
    /// Fed by both emission regions, so fringes are possible.
    pub eraser: bool,
    pub coincidences: usize,
    pub histogram: Histogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FringeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fitted: Vec<f64>,
    pub peaks_m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooledPattern {
    pub detectors: Vec<String>,
    pub histogram: Histogram,
    pub peaks_m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDifference {
    pub a: String,
    pub b: String,
    /// Magnitude in `[0, π]`.
    pub radians: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginal {
    pub histogram: Histogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FringeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fitted: Vec<f64>,
}

/// Dependence of D0 positions on the remote setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingsTest {
    /// `d0_annotation` or `idler_class`.
    pub labels: String,
    pub n_erase: usize,
    pub n_mark: usize,
    pub mi: MIEstimate,
    pub ks: KsResult,
    pub alpha: f64,
    pub ks_rejects: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkingReport {
    pub overall: MarkingEstimate,
    pub scan: Vec<ScanPoint>,
    /// Index of the first scan segment after the largest step in `p̂`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub scenario_hash: String,
    pub seed: u64,
    pub n_emissions: u64,
    pub n_events: usize,
    pub model: String,
    pub kappa: f64,
    pub detector_counts: BTreeMap<String, usize>,
    pub signal_delay_ns: f64,
    pub idler_delays_ns: BTreeMap<String, f64>,
    pub coincidences: CoincidenceSummary,
    pub fringes: Vec<DetectorFringe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_which_path: Option<PooledPattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_difference: Option<PhaseDifference>,
    pub d0_marginal: Marginal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings_test: Option<SettingsTest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub onset: Option<OnsetEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauBinReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marking: Option<MarkingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<DecodedMessage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<CausalAuditReport>,
    pub notes: Vec<String>,
}

fn fit_with(
    h: &Histogram,
    env: &FringeEnvelope,
    period: f64,
) -> (Option<FringeFit>, Option<String>, Vec<f64>) {
    match fit_fringes(h, env, period, FitOptions::default()) {
        Ok(f) => (Some(f), None, fitted_counts(h, env, &f)),
        Err(e) => (None, Some(e.to_string()), Vec::new()),
    }
}

fn settings_test(
    cfg: &ScenarioConfig,
    d0: &[&DetectionEvent],
    pairs: &[CoincidencePair],
    eraser: &[String],
    binning: Binning,
    notes: &mut Vec<String>,
) -> Option<SettingsTest> {
    let a = &cfg.analysis;
    let mi_grid = Histogram::new(binning.lo, binning.hi, a.mi_bins).ok()?;
    let annotated = d0.iter().any(|e| e.setting == Setting::Mark)
        && d0.iter().any(|e| e.setting == Setting::Erase);
    let (source, labelled): (&str, Vec<(usize, f64)>) = if annotated {
        let v = d0
            .iter()
            .filter_map(|e| e.x.map(|x| (usize::from(e.setting == Setting::Mark), x)))
            .collect();
        ("d0_annotation", v)
    } else {
        let v = pairs
            .iter()
            .filter_map(|p| {
                let class = usize::from(!eraser.contains(&p.idler_event.detector));
                p.signal_event.x.map(|x| (class, x))
            })
            .collect();
        ("idler_class", v)
    };
    let (mut labels, mut outcomes) = (Vec::new(), Vec::new());
    let (mut xe, mut xm) = (Vec::new(), Vec::new());
    for &(l, x) in &labelled {
        if let Some(b) = mi_grid.bin_of(x) {
            labels.push(l);
            outcomes.push(b);
        }
        if l == 0 {
            xe.push(x);
        } else {
            xm.push(x);
        }
    }
    let opts = MiOptions {
        resamples: a.bootstrap_resamples,
        seed: cfg.seed,
        ..Default::default()
    };
    let mi = match estimate_mutual_information(&labels, &outcomes, 2, a.mi_bins, opts) {
        Ok(m) => m,
        Err(e) => {
            notes.push(format!("settings test skipped: {e}"));
            return None;
        }
    };
    let ks = match ks_two_sample(&xe, &xm) {
        Ok(k) => k,
        Err(e) => {
            notes.push(format!("settings test skipped: {e}"));
            return None;
        }
    };
    Some(SettingsTest {
        labels: source.into(),
        n_erase: xe.len(),
        n_mark: xm.len(),
        mi,
        ks,
        alpha: a.alpha,
        ks_rejects: ks.p_value < a.alpha,
    })
}

/// Runs every analysis the config enables. Sections that cannot be computed
/// are omitted with a note.
pub fn analyze(
    cfg: &ScenarioConfig,
    events: &[DetectionEvent],
) -> Result<AnalysisReport, ConfigError> {
    let built = cfg.build()?;
    let scn = &built.scenario;
    let a = &cfg.analysis;
    let mut notes = Vec::new();

    let period = cfg.signal.fringe_period_m();
    let binning = Binning {
        lo: scn.grid.lo,
        hi: scn.grid.hi,
        bins: a.bins,
    };
    let marginal_env = FringeEnvelope::marginal(&cfg.signal);

    let mut detector_counts = BTreeMap::new();
    for e in events {
        *detector_counts.entry(e.detector.clone()).or_insert(0) += 1;
    }
    let d0_owned: Vec<DetectionEvent> = events.iter().filter(|e| e.is_signal()).cloned().collect();
    let d0: Vec<&DetectionEvent> = d0_owned.iter().collect();
    let idler: Vec<DetectionEvent> = events.iter().filter(|e| !e.is_signal()).cloned().collect();

    let mut idler_delays_ns = BTreeMap::new();
    for tc in scn.all_coefficients() {
        for (k, det) in tc.detectors().iter().enumerate() {
            idler_delays_ns
                .entry(det.clone())
                .or_insert(tc.delay_at(k) * 1e9);
        }
    }

    // Coincidence fringes.
    let window = a.coincidence_window_ns * 1e-9;
    let signal_delay = scn.signal_delay_s();
    let pairs = match match_coincidences(&d0_owned, &idler, window, |det| {
        if det == crate::scenarios::D0 {
            signal_delay
        } else {
            scn.idler_delay(det).unwrap_or(0.0)
        }
    }) {
        Ok(p) => p,
        Err(e) => {
            notes.push(format!("coincidence matching failed: {e}"));
            Vec::new()
        }
    };
    let mut per_detector: BTreeMap<String, Vec<f64>> = idler_delays_ns
        .keys()
        .map(|d| (d.clone(), Vec::new()))
        .collect();
    for p in &pairs {
        if let Some(x) = p.signal_event.x {
            per_detector
                .entry(p.idler_event.detector.clone())
                .or_default()
                .push(x);
        }
    }
    let coincidences = CoincidenceSummary {
        window_ns: a.coincidence_window_ns,
        signal_events: d0.len(),
        idler_events: idler.len(),
        pairs: pairs.len(),
        per_detector: per_detector
            .iter()
            .map(|(k, v)| (k.clone(), v.len()))
            .collect(),
    };

    let eraser: Vec<String> = scn
        .all_coefficients()
        .iter()
        .flat_map(|tc| tc.eraser_detectors())
        .map(String::from)
        .collect();
    let peak_opts = PeakOptions::default();
    let mut fringes = Vec::new();
    for (det, xs) in &per_detector {
        let Some(tc) = scn.coefficients_for(det) else {
            continue;
        };
        let Some(env) = FringeEnvelope::for_detector(&cfg.signal, tc, det) else {
            continue;
        };
        let histogram = binning
            .histogram(xs.iter().copied())
            .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
        let (fit, fit_error, fitted) = fit_with(&histogram, &env, period);
        let peaks_m = peak_positions(&histogram, a.peak_min_separation_m, peak_opts);
        fringes.push(DetectorFringe {
            detector: det.clone(),
            eraser: eraser.contains(det),
            coincidences: xs.len(),
            histogram,
            fit,
            fit_error,
            fitted,
            peaks_m,
        });
    }

    let which_path: Vec<&DetectorFringe> = fringes
        .iter()
        .filter(|f| {
            !f.eraser
                && scn
                    .coefficients(Setting::Erase)
                    .index_of(&f.detector)
                    .is_some()
        })
        .collect();
    let pooled_which_path = if which_path.len() >= 2 {
        let mut h = which_path[0].histogram.clone();
        for f in &which_path[1..] {
            h = h
                .merged(&f.histogram)
                .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
        }
        let peaks_m = peak_positions(&h, a.peak_min_separation_m, peak_opts);
        Some(PooledPattern {
            detectors: which_path.iter().map(|f| f.detector.clone()).collect(),
            histogram: h,
            peaks_m,
        })
    } else {
        None
    };

    let fitted_eraser: Vec<&DetectorFringe> = fringes
        .iter()
        .filter(|f| f.eraser && f.fit.is_some())
        .collect();
    let phase_difference = match fitted_eraser.as_slice() {
        [fa, fb, ..] => Some(PhaseDifference {
            a: fa.detector.clone(),
            b: fb.detector.clone(),
            radians: phase_difference(fa.fit.unwrap().phase, fb.fit.unwrap().phase),
        }),
        _ => None,
    };

    let marginal_hist = binning
        .histogram(d0.iter().filter_map(|e| e.x))
        .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
    let (fit, fit_error, fitted) = fit_with(&marginal_hist, &marginal_env, period);
    let d0_marginal = Marginal {
        histogram: marginal_hist,
        fit,
        fit_error,
        fitted,
    };

    let settings_test = settings_test(cfg, &d0, &pairs, &eraser, binning, &mut notes);

    let travel = scn.schedule.travel_time_s();
    let onset = match scn.schedule.first_send() {
        Some(t_send) if cfg.schedule.message.is_none() => {
            let hyps = predicted_onsets(t_send, travel, a.past_kappa_prime);
            let opts = OnsetOptions {
                window_emissions: a.onset_window_emissions,
                cusum_k: a.cusum_k,
                cusum_h: a.cusum_h,
            };
            match detect_onset(
                &d0_owned,
                &marginal_env,
                period,
                binning,
                &scn.schedule,
                &hyps,
                opts,
            ) {
                Ok(o) => Some(o),
                Err(e) => {
                    notes.push(format!("onset detection skipped: {e}"));
                    None
                }
            }
        }
        _ => None,
    };

    let tau = if a.tau_bins_s.is_empty() {
        None
    } else {
        let opts = TauOptions {
            alpha: a.alpha,
            ..Default::default()
        };
        match tau_dependence_test(
            &tau_samples(&d0_owned),
            &a.tau_bins_s,
            &marginal_env,
            period,
            binning,
            opts,
        ) {
            Ok(t) => Some(t),
            Err(e) => {
                notes.push(format!("tau test skipped: {e}"));
                None
            }
        }
    };

    let v_ref = a
        .reference_visibility
        .unwrap_or(cfg.model.conjectured_visibility);
    let marking = if a.scan_positions == 0 {
        None
    } else {
        let opts = MarkingOptions {
            resamples: a.bootstrap_resamples,
            seed: cfg.seed,
            ..Default::default()
        };
        let result = estimate_marking(&d0_marginal.histogram, &marginal_env, period, v_ref, opts)
            .and_then(|overall| {
                let scan = marking_scan(
                    &d0_owned,
                    a.scan_positions,
                    &marginal_env,
                    period,
                    v_ref,
                    binning,
                    opts,
                )?;
                let p: Vec<f64> = scan.iter().map(|s| s.estimate.p_hat).collect();
                Ok(MarkingReport {
                    overall,
                    step_index: locate_step(&p),
                    scan,
                })
            });
        match result {
            Ok(m) => Some(m),
            Err(e) => {
                notes.push(format!("marking estimate skipped: {e}"));
                None
            }
        }
    };

    let message = match (&cfg.schedule.message, cfg.schedule.symbol_period_s) {
        (Some(bits), Some(symbol_period_s)) => {
            let opts = DecodeOptions {
                symbol_period_s,
                start_s: cfg.schedule.start_s.unwrap_or(0.0),
                n_bits: bits.len(),
                shift_s: (1.0 - built.kappa) * cfg.geometry.remote_distance_m / SPEED_OF_LIGHT,
                threshold: a.decode_threshold.unwrap_or(0.5 * v_ref),
                min_slot_events: MIN_SLOT_EVENTS,
            };
            match decode_message(&d0_owned, &marginal_env, period, binning, opts, Some(bits)) {
                Ok(m) => Some(m),
                Err(e) => {
                    notes.push(format!("message decoding skipped: {e}"));
                    None
                }
            }
        }
        _ => None,
    };

    let audit = match audit_topology(scn, a.lightlike_epsilon_ns * 1e-9) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("causal audit skipped: {e}"));
            None
        }
    };

    Ok(AnalysisReport {
        scenario: cfg.name.clone(),
        scenario_hash: cfg.hash(),
        seed: cfg.seed,
        n_emissions: cfg.n_emissions,
        n_events: events.len(),
        model: cfg.model.kind.as_str().into(),
        kappa: built.kappa,
        detector_counts,
        signal_delay_ns: signal_delay * 1e9,
        idler_delays_ns,
        coincidences,
        fringes,
        pooled_which_path,
        phase_difference,
        d0_marginal,
        settings_test,
        onset,
        tau,
        marking,
        message,
        audit,
        notes,
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "DCQE analysis report");
        if let Some(n) = &self.scenario {
            let _ = writeln!(w, "scenario        {n}");
        }
        let _ = writeln!(w, "hash            {}", self.scenario_hash);
        let _ = writeln!(w, "seed            {}", self.seed);
        let _ = writeln!(w, "emissions       {}", self.n_emissions);
        let _ = writeln!(w, "events          {}", self.n_events);
        let _ = writeln!(w, "model           {} (kappa {})", self.model, self.kappa);
        let _ = writeln!(w, "\n[detectors]");
        for (d, n) in &self.detector_counts {
            let delay = if d == crate::scenarios::D0 {
                self.signal_delay_ns
            } else {
                self.idler_delays_ns.get(d).copied().unwrap_or(f64::NAN)
            };
            let _ = writeln!(w, "{d:<8} events {n:>10}  delay {delay:.4} ns");
        }
        let c = &self.coincidences;
        let _ = writeln!(
            w,
            "\n[coincidences] window {} ns, {} pairs",
            c.window_ns, c.pairs
        );
        let _ = writeln!(w, "\n[fringes]");
        for f in &self.fringes {
            let tag = if f.eraser { "eraser" } else { "which-path" };
            match &f.fit {
                Some(fit) => {
                    let _ = writeln!(
                        w,
                        "D0x{:<6} {tag:<10} n {:>9}  V {:.4}  phase {:+.4} rad  period {:.4e} m",
                        f.detector, f.coincidences, fit.visibility, fit.phase, fit.period
                    );
                }
                None => {
                    let _ = writeln!(
                        w,
                        "D0x{:<6} {tag:<10} n {:>9}  no fit: {}",
                        f.detector,
                        f.coincidences,
                        f.fit_error.as_deref().unwrap_or("")
                    );
                }
            }
            let _ = writeln!(w, "         peaks {}", fmt_list(&f.peaks_m));
        }
        if let Some(p) = &self.pooled_which_path {
            let _ = writeln!(
                w,
                "pooled {}: {} peaks {}",
                p.detectors.join("+"),
                p.peaks_m.len(),
                fmt_list(&p.peaks_m)
            );
        }
        if let Some(p) = &self.phase_difference {
            let _ = writeln!(
                w,
                "phase difference {} - {}: {:.4} rad",
                p.a, p.b, p.radians
            );
        }
        match &self.d0_marginal.fit {
            Some(f) => {
                let _ = writeln!(w, "D0 marginal: V {:.4}", f.visibility);
            }
            None => {
                let _ = writeln!(w, "D0 marginal: no fit");
            }
        }
        if let Some(t) = &self.settings_test {
            let _ = writeln!(
                w,
                "\n[settings] labels {} (ERASE {}, MARK {})",
                t.labels, t.n_erase, t.n_mark
            );
            let _ = writeln!(
                w,
                "MI {:.3e} bits  CI [{:.3e}, {:.3e}]",
                t.mi.mi_bits, t.mi.ci_low, t.mi.ci_high
            );
            let _ = writeln!(
                w,
                "KS D {:.4e}  p {:.4}  {} at alpha {}",
                t.ks.statistic,
                t.ks.p_value,
                if t.ks_rejects {
                    "rejects"
                } else {
                    "does not reject"
                },
                t.alpha
            );
        }
        if let Some(o) = &self.onset {
            let _ = writeln!(w, "\n[onset]");
            match o.t_hat {
                Some(t) => {
                    let _ = writeln!(w, "t_hat {t:.6} s  +/- {:.3e} s", o.ci);
                }
                None => {
                    let _ = writeln!(w, "no change detected");
                }
            }
            let _ = writeln!(w, "verdict {}", o.model_verdict.as_str());
            for h in &o.hypotheses {
                let _ = writeln!(w, "  {:<10} {:.6} s", h.verdict.as_str(), h.onset_s);
            }
        }
        if let Some(t) = &self.tau {
            let _ = writeln!(w, "\n[tau]");
            for b in &t.bins {
                let _ = writeln!(
                    w,
                    "tau {:.3e} s  n {:>8}  V {:.4}",
                    b.tau_s, b.n, b.visibility
                );
            }
            for p in &t.pairs {
                let _ = writeln!(
                    w,
                    "KS {}-{}  D {:.4e}  p {:.3e}  reject {}",
                    p.a, p.b, p.statistic, p.p_value, p.reject
                );
            }
            if let Some(tc) = t.tau_c_hat {
                let _ = writeln!(w, "tau_c_hat {tc:.4e} s");
            }
        }
        if let Some(m) = &self.marking {
            let _ = writeln!(
                w,
                "\n[marking] overall p_hat {:.4} [{:.4}, {:.4}]",
                m.overall.p_hat, m.overall.ci_low, m.overall.ci_high
            );
            for p in &m.scan {
                let _ = writeln!(
                    w,
                    "{:>3}  {:.4e}..{:.4e} s  p_hat {:.4} [{:.4}, {:.4}]",
                    p.index,
                    p.t_start,
                    p.t_end,
                    p.estimate.p_hat,
                    p.estimate.ci_low,
                    p.estimate.ci_high
                );
            }
            if let Some(k) = m.step_index {
                let _ = writeln!(w, "step before segment {k}");
            }
        }
        if let Some(m) = &self.message {
            let _ = writeln!(w, "\n[message] decoded {}", m.bits);
            if let (Some(e), Some(ber), Some((lo, hi))) = (m.bit_errors, m.ber, m.ber_ci) {
                let _ = writeln!(w, "bit errors {e}  BER {ber:.4} [{lo:.4}, {hi:.4}]");
            }
        }
        if let Some(a) = &self.audit {
            let _ = writeln!(w, "\n[audit] verdict {}", a.verdict.as_str());
            for e in &a.entries {
                let _ = writeln!(w, "{:<8} {:?}", e.event.label, e.class.kind);
            }
        }
        if !self.notes.is_empty() {
            let _ = writeln!(w, "\n[notes]");
            for n in &self.notes {
                let _ = writeln!(w, "- {n}");
            }
        }
        s
    }
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", items.join(", "))
}

fn histogram_csv(h: &Histogram, fitted: &[f64]) -> String {
    let mut s = String::from("x_m,counts,fitted\n");
    for (i, c) in h.counts.iter().enumerate() {
        let f = fitted
            .get(i)
            .map(|v| format!("{v:.9e}"))
            .unwrap_or_default();
        let _ = writeln!(s, "{:.9e},{c},{f}", h.center(i));
    }
    s
}

fn histogram_plot(title: &str, h: &Histogram, fitted: &[f64], markers: &[f64]) -> Plot {
    let xs = h.centers();
    let mut series = vec![Series {
        name: "counts".into(),
        points: xs.iter().copied().zip(h.counts.iter().copied()).collect(),
        style: Style::Steps,
        color: "black",
    }];
    if !fitted.is_empty() {
        series.push(Series {
            name: "fit".into(),
            points: xs.iter().copied().zip(fitted.iter().copied()).collect(),
            style: Style::Line,
            color: "steelblue",
        });
    }
    Plot {
        title: title.into(),
        x_label: "x (m)".into(),
        y_label: "counts per bin".into(),
        series,
        markers: markers.iter().map(|&x| (x, "peak".to_string())).collect(),
    }
}

/// Writes `report.json`, `report.txt` and the CSV/SVG side files into `dir`.
/// Returns the paths written.
pub fn write_report(dir: &Path, report: &AnalysisReport) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> io::Result<()> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put("report.json".into(), report.to_json() + "\n")?;
    put("report.txt".into(), report.to_text())?;

    for f in &report.fringes {
        let stem = format!("fringe_D0x{}", f.detector);
        put(
            format!("{stem}.csv"),
            histogram_csv(&f.histogram, &f.fitted),
        )?;
        let plot = histogram_plot(
            &format!("D0 x {} coincidences", f.detector),
            &f.histogram,
            &f.fitted,
            &f.peaks_m,
        );
        put(format!("{stem}.svg"), svg::render(&plot))?;
    }
    if let Some(p) = &report.pooled_which_path {
        put(
            "which_path_pooled.csv".into(),
            histogram_csv(&p.histogram, &[]),
        )?;
        let title = format!("D0 x ({}) pooled", p.detectors.join(" + "));
        put(
            "which_path_pooled.svg".into(),
            svg::render(&histogram_plot(&title, &p.histogram, &[], &p.peaks_m)),
        )?;
    }
    let m = &report.d0_marginal;
    put(
        "d0_marginal.csv".into(),
        histogram_csv(&m.histogram, &m.fitted),
    )?;
    put(
        "d0_marginal.svg".into(),
        svg::render(&histogram_plot("D0 marginal", &m.histogram, &m.fitted, &[])),
    )?;

    if let Some(o) = &report.onset {
        let mut csv = String::from("t_start_s,t_end_s,n,visibility,std_error\n");
        for p in &o.series {
            let _ = writeln!(
                csv,
                "{:.9e},{:.9e},{},{:.9e},{:.9e}",
                p.t_start, p.t_end, p.n, p.visibility, p.std_error
            );
        }
        put("visibility_series.csv".into(), csv)?;
        let mut markers: Vec<(f64, String)> = o
            .hypotheses
            .iter()
            .map(|h| (h.onset_s, h.verdict.as_str().to_string()))
            .collect();
        if let Some(t) = o.t_hat {
            markers.push((t, "onset".into()));
        }
        let plot = Plot {
            title: format!("D0 visibility, verdict {}", o.model_verdict.as_str()),
            x_label: "t (s)".into(),
            y_label: "projected visibility".into(),
            series: vec![Series {
                name: "window".into(),
                points: o
                    .series
                    .iter()
                    .map(|p| (0.5 * (p.t_start + p.t_end), p.visibility))
                    .collect(),
                style: Style::Points,
                color: "black",
            }],
            markers,
        };
        put("visibility_series.svg".into(), svg::render(&plot))?;
    }

    if let Some(t) = &report.tau {
        let mut csv = String::from("tau_s,n,visibility\n");
        for b in &t.bins {
            let _ = writeln!(csv, "{:.9e},{},{:.9e}", b.tau_s, b.n, b.visibility);
        }
        put("tau_bins.csv".into(), csv)?;
        let mut csv = String::from("bin_a,bin_b,ks_statistic,p_value,reject\n");
        for p in &t.pairs {
            let _ = writeln!(
                csv,
                "{},{},{:.9e},{:.9e},{}",
                p.a, p.b, p.statistic, p.p_value, p.reject
            );
        }
        put("tau_pairs.csv".into(), csv)?;
    }

    if let Some(mk) = &report.marking {
        let mut csv =
            String::from("position,t_start_s,t_end_s,n,visibility,p_hat,ci_low,ci_high\n");
        for p in &mk.scan {
            let e = &p.estimate;
            let _ = writeln!(
                csv,
                "{},{:.9e},{:.9e},{},{:.9e},{:.9e},{:.9e},{:.9e}",
                p.index, p.t_start, p.t_end, e.n, e.visibility, e.p_hat, e.ci_low, e.ci_high
            );
        }
        put("marking_scan.csv".into(), csv)?;
        let plot = Plot {
            title: "Marking fraction by scan position".into(),
            x_label: "scan position".into(),
            y_label: "p_hat".into(),
            series: vec![Series {
                name: "p_hat".into(),
                points: mk
                    .scan
                    .iter()
                    .map(|p| (p.index as f64, p.estimate.p_hat))
                    .collect(),
                style: Style::Line,
                color: "black",
            }],
            markers: mk
                .step_index
                .map(|k| vec![(k as f64 - 0.5, "step".to_string())])
                .unwrap_or_default(),
        };
        put("marking_scan.svg".into(), svg::render(&plot))?;
    }

    if let Some(msg) = &report.message {
        let mut csv = String::from("slot,t_start_s,t_end_s,n,visibility,bit,low_confidence\n");
        for s in &msg.slots {
            let _ = writeln!(
                csv,
                "{},{:.9e},{:.9e},{},{:.9e},{},{}",
                s.index, s.t_start, s.t_end, s.n, s.visibility, s.bit, s.low_confidence
            );
        }
        put("message_slots.csv".into(), csv)?;
    }
    Ok(written)
}

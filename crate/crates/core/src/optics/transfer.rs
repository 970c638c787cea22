use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use super::graph::{ElementKind, PathGraph};
use super::{Amplitude, OpticsError, Source};
use crate::SPEED_OF_LIGHT;

/// Unitarity tolerance on column norms and cross-column overlap.
pub const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Relative spread of path lengths to one detector above which the delay is
/// considered ambiguous.
const DELAY_SPREAD_TOLERANCE: f64 = 1e-12;

/// Per-detector complex amplitudes for an idler born in region A or B, plus
/// arrival delays.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCoefficients {
    detectors: Vec<String>,
    from_a: Vec<Amplitude>,
    from_b: Vec<Amplitude>,
    delay_s: Vec<f64>,
}

impl TransferCoefficients {
    /// Builds a coefficient table directly; used for hand-made lossy tables
    /// and tests.
    pub fn from_parts(entries: Vec<(String, Amplitude, Amplitude, f64)>) -> Self {
        let mut tc = TransferCoefficients {
            detectors: Vec::with_capacity(entries.len()),
            from_a: Vec::with_capacity(entries.len()),
            from_b: Vec::with_capacity(entries.len()),
            delay_s: Vec::with_capacity(entries.len()),
        };
        for (d, a, b, t) in entries {
            tc.detectors.push(d);
            tc.from_a.push(a);
            tc.from_b.push(b);
            tc.delay_s.push(t);
        }
        tc
    }

    pub fn detectors(&self) -> &[String] {
        &self.detectors
    }

    pub fn index_of(&self, detector: &str) -> Option<usize> {
        self.detectors.iter().position(|d| d == detector)
    }

    pub fn coeff(&self, source: Source, detector: &str) -> Option<Amplitude> {
        let i = self.index_of(detector)?;
        Some(self.coeff_at(source, i))
    }

    pub fn coeff_at(&self, source: Source, index: usize) -> Amplitude {
        match source {
            Source::A => self.from_a[index],
            Source::B => self.from_b[index],
        }
    }

    pub fn delay(&self, detector: &str) -> Option<f64> {
        self.index_of(detector).map(|i| self.delay_s[i])
    }

    pub fn delay_at(&self, index: usize) -> f64 {
        self.delay_s[index]
    }

    /// Removes a detector column, e.g. to model a lost output.
    pub fn without(&self, detector: &str) -> Self {
        let keep: Vec<usize> = (0..self.detectors.len())
            .filter(|&i| self.detectors[i] != detector)
            .collect();
        TransferCoefficients {
            detectors: keep.iter().map(|&i| self.detectors[i].clone()).collect(),
            from_a: keep.iter().map(|&i| self.from_a[i]).collect(),
            from_b: keep.iter().map(|&i| self.from_b[i]).collect(),
            delay_s: keep.iter().map(|&i| self.delay_s[i]).collect(),
        }
    }

    /// Phase of the two-region interference term at `detector`, i.e.
    /// `arg(g_A · conj(g_B) · e^{-iδ})`. `None` for which-path detectors.
    pub fn fringe_phase(&self, detector: &str, source_phase_rad: f64) -> Option<f64> {
        let i = self.index_of(detector)?;
        let cross =
            self.from_a[i] * self.from_b[i].conj() * Complex64::from_polar(1.0, -source_phase_rad);
        if self.from_a[i].norm() == 0.0 || self.from_b[i].norm() == 0.0 {
            return None;
        }
        Some(cross.arg())
    }

    /// Detectors fed by both regions.
    pub fn eraser_detectors(&self) -> Vec<&str> {
        (0..self.detectors.len())
            .filter(|&i| self.from_a[i].norm_sqr() > 0.0 && self.from_b[i].norm_sqr() > 0.0)
            .map(|i| self.detectors[i].as_str())
            .collect()
    }
}

/// Propagates unit amplitude from each source through the graph.
///
/// Element factors: beamsplitter `[[1, i], [i, 1]] / √2`, mirror `i`, phase
/// segment `exp(i 2π L / λ)`.
pub fn transfer_coefficients(graph: &PathGraph) -> TransferCoefficients {
    let cfg = graph.config();
    let k = 2.0 * PI / cfg.wavelength_m;

    let mut amp_a: HashMap<&str, Complex64> = HashMap::new();
    let mut amp_b: HashMap<&str, Complex64> = HashMap::new();
    // (shortest, longest) structural path length from any source.
    let mut span: HashMap<&str, (f64, f64)> = HashMap::new();

    amp_a.insert(cfg.source_a.as_str(), Complex64::new(1.0, 0.0));
    amp_b.insert(cfg.source_b.as_str(), Complex64::new(1.0, 0.0));
    span.insert(cfg.source_a.as_str(), (0.0, 0.0));
    span.insert(cfg.source_b.as_str(), (0.0, 0.0));

    let i_unit = Complex64::new(0.0, 1.0);
    for el in graph.elements() {
        let input = |m: &HashMap<&str, Complex64>, j: usize| {
            m.get(el.inputs[j].as_str()).copied().unwrap_or_default()
        };
        for amps in [&mut amp_a, &mut amp_b] {
            match el.kind {
                ElementKind::Beamsplitter5050 => {
                    let (x, y) = (input(amps, 0), input(amps, 1));
                    amps.insert(el.outputs[0].as_str(), (x + i_unit * y) * FRAC_1_SQRT_2);
                    amps.insert(el.outputs[1].as_str(), (i_unit * x + y) * FRAC_1_SQRT_2);
                }
                ElementKind::Mirror => {
                    amps.insert(el.outputs[0].as_str(), i_unit * input(amps, 0));
                }
                ElementKind::PhaseSegment => {
                    let factor = Complex64::from_polar(1.0, k * el.length_m);
                    amps.insert(el.outputs[0].as_str(), factor * input(amps, 0));
                }
            }
        }

        let mut merged: Option<(f64, f64)> = None;
        for p in &el.inputs {
            if let Some(&(lo, hi)) = span.get(p.as_str()) {
                merged = Some(match merged {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
        if let Some((lo, hi)) = merged {
            for out in &el.outputs {
                span.insert(out.as_str(), (lo + el.length_m, hi + el.length_m));
            }
        }
    }

    let mut entries = Vec::with_capacity(cfg.detectors.len());
    for (det, port) in &cfg.detectors {
        let (lo, hi) = span.get(port.as_str()).copied().unwrap_or((0.0, 0.0));
        if hi - lo > DELAY_SPREAD_TOLERANCE * hi.max(1.0) {
            log::warn!("detector {det}: path lengths range over [{lo}, {hi}] m; using the longest");
        }
        entries.push((
            det.clone(),
            amp_a.get(port.as_str()).copied().unwrap_or_default(),
            amp_b.get(port.as_str()).copied().unwrap_or_default(),
            hi / SPEED_OF_LIGHT,
        ));
    }
    TransferCoefficients::from_parts(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitarityReport {
    pub norm_a: f64,
    pub norm_b: f64,
    pub overlap_re: f64,
    pub overlap_im: f64,
    /// `|1 - norm_a|`
    pub residual_a: f64,
    pub residual_b: f64,
    pub overlap_modulus: f64,
    pub passed: bool,
}

pub fn validate_unitarity(tc: &TransferCoefficients) -> UnitarityReport {
    let norm_a: f64 = tc.from_a.iter().map(|z| z.norm_sqr()).sum();
    let norm_b: f64 = tc.from_b.iter().map(|z| z.norm_sqr()).sum();
    let overlap: Complex64 = tc
        .from_a
        .iter()
        .zip(&tc.from_b)
        .map(|(a, b)| a * b.conj())
        .sum();
    let residual_a = (1.0 - norm_a).abs();
    let residual_b = (1.0 - norm_b).abs();
    let overlap_modulus = overlap.norm();
    UnitarityReport {
        norm_a,
        norm_b,
        overlap_re: overlap.re,
        overlap_im: overlap.im,
        residual_a,
        residual_b,
        overlap_modulus,
        passed: residual_a <= UNITARITY_TOLERANCE
            && residual_b <= UNITARITY_TOLERANCE
            && overlap_modulus <= UNITARITY_TOLERANCE,
    }
}

impl UnitarityReport {
    pub fn into_result(self) -> Result<Self, OpticsError> {
        if self.passed {
            Ok(self)
        } else {
            Err(OpticsError::NotUnitary {
                residual_a: self.residual_a,
                residual_b: self.residual_b,
                overlap: self.overlap_modulus,
            })
        }
    }
}

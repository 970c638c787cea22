use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::transfer::{validate_unitarity, TransferCoefficients};
use super::{Amplitude, OpticsError, Source};

/// Far-field model of the signal arm: two Gaussian spots, one per SPDC
/// region, each carrying a linear phase ramp of opposite sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalArmModel {
    #[serde(default = "defaults::wavelength")]
    pub wavelength_m: f64,
    #[serde(default = "defaults::slit_separation")]
    pub slit_separation_m: f64,
    #[serde(default = "defaults::screen_distance")]
    pub screen_distance_m: f64,
    #[serde(default = "defaults::sigma")]
    pub envelope_sigma_m: f64,
    #[serde(default = "defaults::center_a")]
    pub envelope_center_a_m: f64,
    #[serde(default = "defaults::center_b")]
    pub envelope_center_b_m: f64,
    #[serde(default)]
    pub source_phase_rad: f64,
}

mod defaults {
    pub fn wavelength() -> f64 {
        702e-9
    }
    pub fn slit_separation() -> f64 {
        3.0e-3
    }
    pub fn screen_distance() -> f64 {
        1.0
    }
    pub fn sigma() -> f64 {
        0.15e-3
    }
    pub fn center_a() -> f64 {
        -0.15e-3
    }
    pub fn center_b() -> f64 {
        0.15e-3
    }
}

impl Default for SignalArmModel {
    fn default() -> Self {
        SignalArmModel {
            wavelength_m: defaults::wavelength(),
            slit_separation_m: defaults::slit_separation(),
            screen_distance_m: defaults::screen_distance(),
            envelope_sigma_m: defaults::sigma(),
            envelope_center_a_m: defaults::center_a(),
            envelope_center_b_m: defaults::center_b(),
            source_phase_rad: 0.0,
        }
    }
}

impl SignalArmModel {
    /// Same optics with both spots centred on the axis.
    pub fn centred(mut self) -> Self {
        self.envelope_center_a_m = 0.0;
        self.envelope_center_b_m = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        let positive = [
            ("wavelength_m", self.wavelength_m),
            ("slit_separation_m", self.slit_separation_m),
            ("screen_distance_m", self.screen_distance_m),
            ("envelope_sigma_m", self.envelope_sigma_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OpticsError::InvalidSignalArm(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("envelope_center_a_m", self.envelope_center_a_m),
            ("envelope_center_b_m", self.envelope_center_b_m),
            ("source_phase_rad", self.source_phase_rad),
        ] {
            if !v.is_finite() {
                return Err(OpticsError::InvalidSignalArm(format!(
                    "{name} must be finite"
                )));
            }
        }
        Ok(())
    }

    /// Spatial period of the two-region interference term, `λ L0 / d`.
    pub fn fringe_period_m(&self) -> f64 {
        self.wavelength_m * self.screen_distance_m / self.slit_separation_m
    }

    /// Half phase ramp `φ(x) = π d x / (λ L0)`.
    pub fn half_phase(&self, x: f64) -> f64 {
        PI * self.slit_separation_m * x / (self.wavelength_m * self.screen_distance_m)
    }

    pub fn center(&self, source: Source) -> f64 {
        match source {
            Source::A => self.envelope_center_a_m,
            Source::B => self.envelope_center_b_m,
        }
    }

    /// Squared envelope `E_r(x)^2 = exp(-(x - x_r)^2 / σ^2)`.
    pub fn envelope_sq(&self, source: Source, x: f64) -> f64 {
        let u = (x - self.center(source)) / self.envelope_sigma_m;
        (-u * u).exp()
    }

    /// `f_r(x) = G((x - x_r)/σ) · exp(i s_r φ(x))`, `G` a unit-peak Gaussian.
    pub fn amplitude(&self, source: Source, x: f64) -> Amplitude {
        let u = (x - self.center(source)) / self.envelope_sigma_m;
        let sign = match source {
            Source::A => 1.0,
            Source::B => -1.0,
        };
        Complex64::from_polar((-0.5 * u * u).exp(), sign * self.half_phase(x))
    }

    /// Incoherent envelope `(E_A^2 + E_B^2) / 2`.
    pub fn incoherent(&self, x: f64) -> f64 {
        0.5 * (self.envelope_sq(Source::A, x) + self.envelope_sq(Source::B, x))
    }

    /// Coherent envelope `E_A · E_B`; equals the incoherent one when the spots
    /// coincide.
    pub fn coherent(&self, x: f64) -> f64 {
        (self.envelope_sq(Source::A, x) * self.envelope_sq(Source::B, x)).sqrt()
    }

    /// Default evaluation grid: 2048 points over ±6σ.
    pub fn default_grid(&self) -> Grid {
        Grid::symmetric(6.0 * self.envelope_sigma_m, 2048)
    }
}

/// Uniform sampling grid used for trapezoidal normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn symmetric(half_width: f64, points: usize) -> Self {
        Grid {
            lo: -half_width,
            hi: half_width,
            points,
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.points).map(move |i| self.lo + h * i as f64)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn trapezoid(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = self.step();
        let n = self.points;
        let mut acc = 0.0;
        for (i, x) in self.xs().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * f(x);
        }
        acc * h
    }
}

/// Joint D0-position / idler-detector density for one signal arm and one
/// idler graph, normalized on a grid.
#[derive(Debug, Clone)]
pub struct JointDensity {
    signal: SignalArmModel,
    tc: TransferCoefficients,
    grid: Grid,
    norm: f64,
}

impl JointDensity {
    /// Fails unless the coefficients are unitary.
    pub fn new(
        signal: &SignalArmModel,
        tc: &TransferCoefficients,
        grid: Grid,
    ) -> Result<Self, OpticsError> {
        signal.validate()?;
        validate_unitarity(tc).into_result()?;
        if grid.points < 2 || !(grid.hi > grid.lo) {
            return Err(OpticsError::InvalidGrid);
        }
        let mut jd = JointDensity {
            signal: signal.clone(),
            tc: tc.clone(),
            grid,
            norm: 1.0,
        };
        let total = grid.trapezoid(|x| (0..jd.tc.detectors().len()).map(|k| jd.raw(x, k)).sum());
        jd.norm = total;
        Ok(jd)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coefficients(&self) -> &TransferCoefficients {
        &self.tc
    }

    /// Unnormalized `|f_A g_A + e^{iδ} f_B g_B|^2 / 2`.
    fn raw(&self, x: f64, k: usize) -> f64 {
        let amp = self.detector_amplitude(x, k);
        0.5 * amp.norm_sqr()
    }

    fn detector_amplitude(&self, x: f64, k: usize) -> Complex64 {
        let fa = self.signal.amplitude(Source::A, x);
        let fb = self.signal.amplitude(Source::B, x)
            * Complex64::from_polar(1.0, self.signal.source_phase_rad);
        fa * self.tc.coeff_at(Source::A, k) + fb * self.tc.coeff_at(Source::B, k)
    }

    pub fn density(&self, x: f64, detector: &str) -> Result<f64, OpticsError> {
        let k = self
            .tc
            .index_of(detector)
            .ok_or_else(|| OpticsError::UnknownDetector(detector.to_string()))?;
        Ok(self.raw(x, k) / self.norm)
    }

    pub fn density_at(&self, x: f64, k: usize) -> f64 {
        self.raw(x, k) / self.norm
    }

    /// D0 marginal, summed over every idler detector.
    pub fn marginal(&self, x: f64) -> f64 {
        (0..self.tc.detectors().len())
            .map(|k| self.raw(x, k))
            .sum::<f64>()
            / self.norm
    }

    /// `P(k | x)` for every detector; sums to one for unitary coefficients.
    pub fn conditional(&self, x: f64, out: &mut Vec<f64>) {
        out.clear();
        let fa = self.signal.amplitude(Source::A, x);
        let fb = self.signal.amplitude(Source::B, x);
        let denom = fa.norm_sqr() + fb.norm_sqr();
        for k in 0..self.tc.detectors().len() {
            out.push(self.detector_amplitude(x, k).norm_sqr() / denom);
        }
    }
}

/// Density at `x` for idler detector `k`.
pub fn joint_density(
    signal: &SignalArmModel,
    tc: &TransferCoefficients,
    grid: Grid,
    x: f64,
    detector: &str,
) -> Result<f64, OpticsError> {
    JointDensity::new(signal, tc, grid)?.density(x, detector)
}

/// D0 marginal at `x`.
pub fn d0_marginal(
    signal: &SignalArmModel,
    tc: &TransferCoefficients,
    grid: Grid,
    x: f64,
) -> Result<f64, OpticsError> {
    Ok(JointDensity::new(signal, tc, grid)?.marginal(x))
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Histogram};
use crate::optics::{SignalArmModel, Source, TransferCoefficients};

/// Fringe-free and fringe-carrying envelopes of a D0 position distribution.
///
/// The expected density is `base(x) + V·modulation(x)·cos(2πx/Λ + ψ)`.
/// For two coincident spots both envelopes equal `E(x)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FringeEnvelope {
    /// `base = modulation = 1`.
    Flat,
    /// `base = w_A E_A^2 + w_B E_B^2`, `modulation = 2√(w_A w_B) E_A E_B`,
    /// or `base` itself if one weight vanishes.
    TwoSpot {
        signal: SignalArmModel,
        weight_a: f64,
        weight_b: f64,
    },
}

impl FringeEnvelope {
    /// Unconditioned D0 pattern.
    pub fn marginal(signal: &SignalArmModel) -> Self {
        FringeEnvelope::TwoSpot {
            signal: signal.clone(),
            weight_a: 0.5,
            weight_b: 0.5,
        }
    }

    /// D0 pattern in coincidence with `detector`.
    pub fn for_detector(
        signal: &SignalArmModel,
        tc: &TransferCoefficients,
        detector: &str,
    ) -> Option<Self> {
        let k = tc.index_of(detector)?;
        Some(FringeEnvelope::TwoSpot {
            signal: signal.clone(),
            weight_a: tc.coeff_at(Source::A, k).norm_sqr(),
            weight_b: tc.coeff_at(Source::B, k).norm_sqr(),
        })
    }

    /// Pattern of several detectors pooled together.
    pub fn pooled(
        signal: &SignalArmModel,
        tc: &TransferCoefficients,
        detectors: &[&str],
    ) -> Option<Self> {
        let (mut wa, mut wb) = (0.0, 0.0);
        for d in detectors {
            let k = tc.index_of(d)?;
            wa += tc.coeff_at(Source::A, k).norm_sqr();
            wb += tc.coeff_at(Source::B, k).norm_sqr();
        }
        Some(FringeEnvelope::TwoSpot {
            signal: signal.clone(),
            weight_a: wa,
            weight_b: wb,
        })
    }

    pub fn base(&self, x: f64) -> f64 {
        match self {
            FringeEnvelope::Flat => 1.0,
            FringeEnvelope::TwoSpot {
                signal,
                weight_a,
                weight_b,
            } => {
                weight_a * signal.envelope_sq(Source::A, x)
                    + weight_b * signal.envelope_sq(Source::B, x)
            }
        }
    }

    pub fn modulation(&self, x: f64) -> f64 {
        match self {
            FringeEnvelope::Flat => 1.0,
            FringeEnvelope::TwoSpot {
                signal,
                weight_a,
                weight_b,
            } => {
                let m = 2.0 * (weight_a * weight_b).sqrt();
                if m <= 1e-12 * (weight_a + weight_b) {
                    self.base(x)
                } else {
                    m * (signal.envelope_sq(Source::A, x) * signal.envelope_sq(Source::B, x)).sqrt()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// Coherence of the fitted pattern, clamped to `[0, 1]`.
    pub visibility: f64,
    /// `ψ` in `cos(2πx/Λ + ψ)`, in `(−π, π]`.
    pub phase: f64,
    pub period: f64,
    /// Fitted fringe-free counts per bin at the envelope maximum.
    pub baseline: f64,
    /// Residual sum of squares per degree of freedom.
    pub residual: f64,
}

/// Options for [`fit_fringes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Relative half-width of the period search around the seed; 0 fixes the
    /// period.
    pub period_search: f64,
    pub min_bins: usize,
    pub min_counts: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            period_search: 0.1,
            min_bins: 16,
            min_counts: 1000.0,
        }
    }
}

impl FitOptions {
    pub fn fixed_period() -> Self {
        FitOptions {
            period_search: 0.0,
            ..Default::default()
        }
    }
}

const SIMPSON_INTERVALS: usize = 8;

/// Per-bin integrals of base, modulation·cos and modulation·sin.
struct Design {
    rows: Vec<[f64; 3]>,
}

impl Design {
    fn new(h: &Histogram, env: &FringeEnvelope, period: f64) -> Self {
        let k = 2.0 * PI / period;
        let n = SIMPSON_INTERVALS;
        let rows = (0..h.bins())
            .map(|i| {
                let (a, b) = h.edges(i);
                let step = (b - a) / n as f64;
                let mut acc = [0.0; 3];
                for j in 0..=n {
                    let x = a + step * j as f64;
                    let w = if j == 0 || j == n {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let m = env.modulation(x);
                    let (s, c) = (k * x).sin_cos();
                    acc[0] += w * env.base(x);
                    acc[1] += w * m * c;
                    acc[2] += w * m * s;
                }
                acc.map(|v| v * step / 3.0)
            })
            .collect();
        Design { rows }
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Least squares for `counts ≈ b·D0 + α·D1 + β·D2`; returns coefficients and
/// the residual sum of squares.
fn linear_fit(design: &Design, counts: &[f64]) -> Option<([f64; 3], f64)> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (row, &y) in design.rows.iter().zip(counts) {
        for i in 0..3 {
            atb[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    // The modulation columns vanish for a flat modulation-free design; fall
    // back to a baseline-only fit.
    let coef =
        solve3(ata, atb).or_else(|| (ata[0][0] > 0.0).then(|| [atb[0] / ata[0][0], 0.0, 0.0]))?;
    let ssr = design
        .rows
        .iter()
        .zip(counts)
        .map(|(r, &y)| {
            let f = coef[0] * r[0] + coef[1] * r[1] + coef[2] * r[2];
            (y - f) * (y - f)
        })
        .sum();
    Some((coef, ssr))
}

fn finish(
    h: &Histogram,
    design: &Design,
    coef: [f64; 3],
    ssr: f64,
    period: f64,
) -> Result<FringeFit, AnalysisError> {
    let dof = (h.bins() as f64 - 4.0).max(1.0);
    let residual = ssr / dof;
    let [b, alpha, beta] = coef;
    if !(b > 0.0) || !b.is_finite() {
        return Err(AnalysisError::FitNotConverged { residual });
    }
    let peak_base = design.rows.iter().map(|r| r[0]).fold(0.0, f64::max);
    Ok(FringeFit {
        visibility: ((alpha * alpha + beta * beta).sqrt() / b).clamp(0.0, 1.0),
        phase: (-beta).atan2(alpha),
        period,
        baseline: b * peak_base,
        residual,
    })
}

/// Fits `baseline·[base(x) + V·modulation(x)·cos(2πx/Λ + ψ)]` to bin counts.
///
/// The period starts at `period_seed` and is refined within
/// `±options.period_search` of it.
pub fn fit_fringes(
    h: &Histogram,
    envelope: &FringeEnvelope,
    period_seed: f64,
    options: FitOptions,
) -> Result<FringeFit, AnalysisError> {
    if h.bins() < options.min_bins {
        return Err(AnalysisError::TooFewBins {
            bins: h.bins(),
            required: options.min_bins,
        });
    }
    if h.total() < options.min_counts {
        return Err(AnalysisError::TooFewCounts {
            counts: h.total(),
            required: options.min_counts,
        });
    }
    if !(period_seed > 0.0 && period_seed.is_finite()) {
        return Err(AnalysisError::Invalid(format!(
            "fringe period must be > 0, got {period_seed}"
        )));
    }

    let eval = |p: f64| -> Option<(Design, [f64; 3], f64)> {
        let d = Design::new(h, envelope, p);
        let (c, s) = linear_fit(&d, &h.counts)?;
        Some((d, c, s))
    };
    let ssr_at = |p: f64| eval(p).map_or(f64::INFINITY, |r| r.2);

    let mut period = period_seed;
    if options.period_search > 0.0 {
        let lo = period_seed * (1.0 - options.period_search);
        let hi = period_seed * (1.0 + options.period_search);
        // Coarse scan, then golden section around the best point.
        const SCAN: usize = 40;
        let step = (hi - lo) / SCAN as f64;
        let best = (0..=SCAN)
            .map(|i| lo + step * i as f64)
            .map(|p| (p, ssr_at(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| p)
            .unwrap_or(period_seed);
        period = golden_min(
            ssr_at,
            (best - step).max(lo),
            (best + step).min(hi),
            1e-12 * period_seed,
        );
    }

    let (d, coef, ssr) = eval(period).ok_or(AnalysisError::FitNotConverged {
        residual: f64::INFINITY,
    })?;
    finish(h, &d, coef, ssr, period)
}

/// Golden-section minimum of `f` on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Expected counts per bin under a fitted pattern.
pub fn fitted_counts(h: &Histogram, envelope: &FringeEnvelope, fit: &FringeFit) -> Vec<f64> {
    let d = Design::new(h, envelope, fit.period);
    let peak_base = d.rows.iter().map(|r| r[0]).fold(0.0, f64::max);
    if peak_base <= 0.0 {
        return vec![0.0; h.bins()];
    }
    let b = fit.baseline / peak_base;
    let (s, c) = fit.phase.sin_cos();
    let (alpha, beta) = (b * fit.visibility * c, -b * fit.visibility * s);
    d.rows
        .iter()
        .map(|r| b * r[0] + alpha * r[1] + beta * r[2])
        .collect()
}

/// Visibility with the phase held at `phase`, signed: negative when the
/// pattern is anti-phased to the reference.
pub fn projected_visibility(
    h: &Histogram,
    envelope: &FringeEnvelope,
    period: f64,
    phase: f64,
) -> Result<f64, AnalysisError> {
    projected_visibility_with_error(h, envelope, period, phase).map(|(v, _)| v)
}

/// [`projected_visibility`] with its standard error, propagated from Poisson
/// counts at the fitted rates.
pub fn projected_visibility_with_error(
    h: &Histogram,
    envelope: &FringeEnvelope,
    period: f64,
    phase: f64,
) -> Result<(f64, f64), AnalysisError> {
    let d = Design::new(h, envelope, period);
    // cos(kx + ψ) = cos ψ·cos kx − sin ψ·sin kx
    let (s, c) = phase.sin_cos();
    let rows: Vec<[f64; 2]> = d.rows.iter().map(|r| [r[0], c * r[1] - s * r[2]]).collect();
    let mut ata = [[0.0; 2]; 2];
    let mut atb = [0.0; 2];
    for (r, &y) in rows.iter().zip(&h.counts) {
        for i in 0..2 {
            atb[i] += r[i] * y;
            for j in 0..2 {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
    if det.abs() < 1e-300 || h.total() == 0.0 {
        return Err(AnalysisError::FitNotConverged {
            residual: f64::INFINITY,
        });
    }
    let inv = [
        [ata[1][1] / det, -ata[0][1] / det],
        [-ata[1][0] / det, ata[0][0] / det],
    ];
    let b = inv[0][0] * atb[0] + inv[0][1] * atb[1];
    let a = inv[1][0] * atb[0] + inv[1][1] * atb[1];
    if !(b > 0.0) {
        return Err(AnalysisError::FitNotConverged {
            residual: f64::INFINITY,
        });
    }
    let v = a / b;
    // d(a/b)/dy_i = (u_i − v·w_i)/b with a = Σu·y, b = Σw·y.
    let var: f64 = rows
        .iter()
        .map(|r| {
            let w = inv[0][0] * r[0] + inv[0][1] * r[1];
            let u = inv[1][0] * r[0] + inv[1][1] * r[1];
            let mu = (b * r[0] + a * r[1]).max(0.0);
            ((u - v * w) / b).powi(2) * mu
        })
        .sum();
    Ok((v, var.sqrt()))
}

/// Phase difference wrapped to `[0, π]` in magnitude.
pub fn phase_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Noiseless histogram from exact bin integrals of
    /// `n·(base + v·mod·cos(2πx/Λ + ψ))`, by a fine midpoint rule.
    fn exact_histogram(
        env: &FringeEnvelope,
        lo: f64,
        hi: f64,
        bins: usize,
        n: f64,
        v: f64,
        period: f64,
        psi: f64,
    ) -> Histogram {
        let mut h = Histogram::new(lo, hi, bins).unwrap();
        for i in 0..bins {
            let (a, b) = h.edges(i);
            let m = 2000;
            let dx = (b - a) / m as f64;
            let s: f64 = (0..m)
                .map(|j| {
                    let x = a + dx * (j as f64 + 0.5);
                    env.base(x) + v * env.modulation(x) * (2.0 * PI * x / period + psi).cos()
                })
                .sum();
            h.counts[i] = n * s * dx;
        }
        h
    }

    #[test]
    fn recovers_pure_cosine() {
        let period = 1.0;
        let h = exact_histogram(&FringeEnvelope::Flat, -2.0, 2.0, 64, 1e4, 1.0, period, 0.0);
        let fit = fit_fringes(&h, &FringeEnvelope::Flat, 1.03, FitOptions::default()).unwrap();
        assert!((fit.visibility - 1.0).abs() < 1e-6, "{fit:?}");
        assert!(fit.phase.abs() < 1e-6, "{fit:?}");
        assert!((fit.period - period).abs() < 1e-6);
    }

    #[test]
    fn recovers_enveloped_fringes() {
        let s = SignalArmModel::default();
        let env = FringeEnvelope::marginal(&s);
        let g = s.default_grid();
        let h = exact_histogram(&env, g.lo, g.hi, 64, 1e9, 0.7, s.fringe_period_m(), 1.2);
        let fit = fit_fringes(&h, &env, s.fringe_period_m(), FitOptions::default()).unwrap();
        assert!((fit.visibility - 0.7).abs() < 1e-3, "{fit:?}");
        assert!((fit.phase - 1.2).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn fitted_curve_reproduces_counts() {
        let h = exact_histogram(&FringeEnvelope::Flat, -2.0, 2.0, 64, 1e4, 0.6, 1.0, 0.4);
        let fit = fit_fringes(&h, &FringeEnvelope::Flat, 1.0, FitOptions::default()).unwrap();
        for (a, b) in fitted_counts(&h, &FringeEnvelope::Flat, &fit)
            .iter()
            .zip(&h.counts)
        {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn projected_sign() {
        let h = exact_histogram(&FringeEnvelope::Flat, -2.0, 2.0, 64, 1e4, 0.5, 1.0, PI);
        let v = projected_visibility(&h, &FringeEnvelope::Flat, 1.0, 0.0).unwrap();
        assert!((v + 0.5).abs() < 1e-3, "{v}");
    }

    #[test]
    fn standard_error_matches_poisson_spread() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Poisson};
        let h = exact_histogram(&FringeEnvelope::Flat, -2.0, 2.0, 64, 125.0, 0.3, 1.0, 0.0);
        let (_, se) = projected_visibility_with_error(&h, &FringeEnvelope::Flat, 1.0, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let vs: Vec<f64> = (0..4000)
            .map(|_| {
                let mut draw = h.clone();
                for c in &mut draw.counts {
                    *c = Poisson::new(*c).unwrap().sample(&mut rng);
                }
                projected_visibility(&draw, &FringeEnvelope::Flat, 1.0, 0.0).unwrap()
            })
            .collect();
        let m = vs.iter().sum::<f64>() / vs.len() as f64;
        let sd = (vs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vs.len() - 1) as f64).sqrt();
        assert!((se / sd - 1.0).abs() < 0.1, "se {se} sd {sd}");
    }

    #[test]
    fn preconditions() {
        let h = Histogram::new(0.0, 1.0, 8).unwrap();
        assert!(matches!(
            fit_fringes(&h, &FringeEnvelope::Flat, 1.0, FitOptions::default()),
            Err(AnalysisError::TooFewBins { .. })
        ));
        let h = Histogram::from_values(0.0, 1.0, 32, [0.5; 10]).unwrap();
        assert!(matches!(
            fit_fringes(&h, &FringeEnvelope::Flat, 1.0, FitOptions::default()),
            Err(AnalysisError::TooFewCounts { .. })
        ));
        let h = Histogram::from_values(0.0, 1.0, 32, [2.0; 2000]).unwrap();
        assert!(fit_fringes(&h, &FringeEnvelope::Flat, 1.0, FitOptions::default()).is_err());
    }

    #[test]
    fn phase_difference_wraps() {
        assert!((phase_difference(-PI / 2.0, PI / 2.0) - PI).abs() < 1e-12);
        assert!((phase_difference(3.0, -3.0) - (2.0 * PI - 6.0)).abs() < 1e-12);
    }
}

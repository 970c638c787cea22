use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Largest gap between the two empirical CDFs.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Kolmogorov survival function `Q(λ) = P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small λ.
        let y = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=8)
            .map(|j| ((2 * j - 1) as f64).powi(2))
            .map(|k| (k * y).exp())
            .sum();
        return (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::Invalid(
            "KS test needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(AnalysisError::Invalid("KS test samples contain NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let v = a[i].min(b[j]);
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let sq = ne.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d),
        n_a: na,
        n_b: nb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_matches_reference_values() {
        // Reference values of the Kolmogorov distribution (scipy.special.kolmogorov).
        for (x, q) in [
            (0.3, 0.9999906941986655),
            (0.5, 0.9639452436648751),
            (1.0, 0.26999967167735456),
            (1.358, 0.05002679733444698),
            (1.628, 0.009975522431181053),
            (2.0, 0.0006709252557796953),
            (3.0, 3.045995948942526e-08),
        ] {
            let got = kolmogorov_survival(x);
            assert!(
                (got - q).abs() <= 1e-10 * q.max(1e-3),
                "Q({x}) = {got}, want {q}"
            );
        }
    }

    #[test]
    fn branches_agree_at_switch() {
        let a = kolmogorov_survival(1.18 - 1e-12);
        let b = kolmogorov_survival(1.18);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn statistic_matches_reference() {
        let a = [0.1, 0.4, 0.7, 1.3, 2.2, 2.5, 3.1];
        let b = [0.2, 0.25, 0.3, 0.9, 1.0, 1.1, 1.2, 1.6];
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.statistic - 0.44642857142857145).abs() < 1e-15, "{r:?}");
    }

    #[test]
    fn identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(ks_two_sample(&a, &[]).is_err());
    }
}

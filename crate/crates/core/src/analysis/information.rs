use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::scenarios::emission_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MIEstimate {
    /// Bias-corrected mutual information, bits per detection.
    pub mi_bits: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiOptions {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for MiOptions {
    fn default() -> Self {
        MiOptions {
            resamples: 200,
            confidence: 0.95,
            seed: 0,
        }
    }
}

/// Miller–Madow corrected mutual information of a joint count table, in bits.
pub fn corrected_mi(table: &[Vec<u64>]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols = table.first().map_or(0, |r| r.len());
    let colsum: Vec<u64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();

    let mut plug = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &k) in row.iter().enumerate() {
            if k > 0 {
                let k = k as f64;
                plug += k / nf * (k * nf / (rows[r] as f64 * colsum[c] as f64)).ln();
            }
        }
    }
    let nonzero = |v: &mut dyn Iterator<Item = u64>| v.filter(|&k| k > 0).count() as f64;
    let m_x = nonzero(&mut rows.iter().copied());
    let m_y = nonzero(&mut colsum.iter().copied());
    let m_xy = nonzero(&mut table.iter().flatten().copied());
    // H_MM = H_plugin + (m − 1)/(2N) for each entropy term.
    let correction = ((m_x - 1.0) + (m_y - 1.0) - (m_xy - 1.0)) / (2.0 * nf);
    (plug + correction) / LN_2
}

fn resample<R: Rng>(table: &[Vec<u64>], rng: &mut R) -> Vec<Vec<u64>> {
    let n: u64 = table.iter().flatten().sum();
    let mut left_n = n;
    let mut left_p = 1.0;
    table
        .iter()
        .map(|row| {
            row.iter()
                .map(|&k| {
                    if left_n == 0 || k == 0 {
                        return 0;
                    }
                    let p = (k as f64 / n as f64 / left_p).clamp(0.0, 1.0);
                    let draw = Binomial::new(left_n, p).map_or(left_n, |b| b.sample(rng));
                    left_n -= draw;
                    left_p -= k as f64 / n as f64;
                    draw
                })
                .collect()
        })
        .collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// MI between a discrete label and a binned outcome, from their joint count
/// table, with a bootstrap CI.
///
/// The bootstrap distribution is re-centred on the estimate before taking
/// percentiles, which removes the resampling bias of the plug-in term.
pub fn mi_from_table(table: &[Vec<u64>], options: MiOptions) -> Result<MIEstimate, AnalysisError> {
    let present = table.iter().filter(|r| r.iter().any(|&k| k > 0)).count();
    if present < 2 {
        return Err(AnalysisError::Degenerate(
            "mutual information needs at least two settings present".into(),
        ));
    }
    if table.iter().any(|r| r.len() != table[0].len()) {
        return Err(AnalysisError::Invalid("ragged count table".into()));
    }
    let n: u64 = table.iter().flatten().sum();
    let raw = corrected_mi(table);
    let mi = raw.max(0.0);

    let (mut lo, mut hi) = (mi, mi);
    if options.resamples > 0 {
        let mut boot: Vec<f64> = (0..options.resamples)
            .into_par_iter()
            .map(|r| {
                let mut rng = emission_rng(options.seed, r as u64);
                corrected_mi(&resample(table, &mut rng))
            })
            .collect();
        boot.sort_by(f64::total_cmp);
        let mean = boot.iter().sum::<f64>() / boot.len() as f64;
        let tail = (1.0 - options.confidence) / 2.0;
        lo = (raw + quantile(&boot, tail) - mean).max(0.0).min(mi);
        hi = (raw + quantile(&boot, 1.0 - tail) - mean).max(mi);
    }
    Ok(MIEstimate {
        mi_bits: mi,
        ci_low: lo,
        ci_high: hi,
        n,
    })
}

/// MI between per-detection labels (`0..n_labels`) and outcome bins
/// (`0..n_bins`).
pub fn estimate_mutual_information(
    labels: &[usize],
    outcomes: &[usize],
    n_labels: usize,
    n_bins: usize,
    options: MiOptions,
) -> Result<MIEstimate, AnalysisError> {
    if labels.len() != outcomes.len() {
        return Err(AnalysisError::Invalid(format!(
            "{} labels but {} outcomes",
            labels.len(),
            outcomes.len()
        )));
    }
    if n_bins == 0 {
        return Err(AnalysisError::Invalid("bin count must be >= 1".into()));
    }
    let mut table = vec![vec![0u64; n_bins]; n_labels];
    for (&l, &o) in labels.iter().zip(outcomes) {
        if l >= n_labels || o >= n_bins {
            return Err(AnalysisError::Invalid(format!(
                "label {l} or bin {o} out of range"
            )));
        }
        table[l][o] += 1;
    }
    mi_from_table(&table, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h2(p: f64) -> f64 {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }

    fn bsc(n: usize, flip: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let y = x
            .iter()
            .map(|&b| if rng.random::<f64>() < flip { 1 - b } else { b })
            .collect();
        (x, y)
    }

    #[test]
    fn exact_table_values() {
        // Perfectly correlated bits: 1 bit minus a negative correction term.
        let t = vec![vec![500, 0], vec![0, 500]];
        let want = 1.0 + ((1.0 + 1.0 - 1.0) / 2000.0) / LN_2;
        assert!((corrected_mi(&t) - want).abs() < 1e-12);
        // Independent table with equal cells: plug-in 0, correction −1/(2N).
        let t = vec![vec![250, 250], vec![250, 250]];
        assert!((corrected_mi(&t) + 1.0 / 2000.0 / LN_2).abs() < 1e-12);
    }

    #[test]
    fn binary_symmetric_channel() {
        let (x, y) = bsc(100_000, 0.11, 4);
        let est = estimate_mutual_information(&x, &y, 2, 2, MiOptions::default()).unwrap();
        let truth = 1.0 - h2(0.11);
        assert!((truth - 0.5).abs() < 1e-3);
        assert!((est.mi_bits - truth).abs() < 0.02, "{est:?}");
        assert!(est.ci_low <= est.mi_bits && est.mi_bits <= est.ci_high);
        assert!(est.ci_low < truth && truth < est.ci_high, "{est:?}");
    }

    #[test]
    fn independent_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let x: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..16)).collect();
        let est = estimate_mutual_information(&x, &y, 2, 16, MiOptions::default()).unwrap();
        assert!(est.mi_bits < 1e-4 && est.ci_low == 0.0, "{est:?}");
    }

    #[test]
    fn degenerate_and_deterministic() {
        assert!(matches!(
            estimate_mutual_information(&[0, 0], &[0, 1], 2, 2, MiOptions::default()),
            Err(AnalysisError::Degenerate(_))
        ));
        let (x, y) = bsc(5_000, 0.2, 1);
        let a = estimate_mutual_information(&x, &y, 2, 2, MiOptions::default()).unwrap();
        let b = estimate_mutual_information(&x, &y, 2, 2, MiOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn resample_preserves_total() {
        let t = vec![vec![3, 0, 7], vec![10, 20, 0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let r = resample(&t, &mut rng);
            assert_eq!(r.iter().flatten().sum::<u64>(), 40);
            assert_eq!(r[0][1], 0);
        }
    }
}

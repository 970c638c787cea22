use super::Histogram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// Moving-average width in bins (odd).
    pub smoothing_bins: usize,
    /// Minimum topographic prominence as a fraction of the smoothed maximum.
    pub min_prominence: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            smoothing_bins: 3,
            min_prominence: 0.05,
        }
    }
}

fn smooth(counts: &[f64], width: usize) -> Vec<f64> {
    let half = (width.max(1) / 2) as isize;
    let n = counts.len() as isize;
    (0..n)
        .map(|i| {
            let (mut s, mut k) = (0.0, 0.0);
            for j in (i - half).max(0)..=(i + half).min(n - 1) {
                s += counts[j as usize];
                k += 1.0;
            }
            s / k
        })
        .collect()
}

fn prominence(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    // Lowest point between the peak and the nearest strictly higher sample on
    // each side (or the edge).
    let side = |range: &mut dyn Iterator<Item = usize>| {
        let mut low = h;
        for j in range {
            if y[j] > h {
                return low;
            }
            low = low.min(y[j]);
        }
        low
    };
    let left = side(&mut (0..i).rev());
    let right = side(&mut (i + 1..y.len()));
    h - left.max(right)
}

/// Peak positions of a smoothed histogram, sorted by position.
///
/// Plateaus report their leftmost bin. Peaks closer than `min_separation`
/// keep the taller one, ties going to smaller x.
pub fn peak_positions(h: &Histogram, min_separation: f64, options: PeakOptions) -> Vec<f64> {
    let y = smooth(&h.counts, options.smoothing_bins);
    let n = y.len();
    let max = y.iter().cloned().fold(0.0, f64::max);
    if n < 3 || max <= 0.0 {
        return Vec::new();
    }
    let mut cands: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        // Extent of the plateau starting at i.
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        let left_lower = i == 0 || y[i - 1] < y[i];
        let right_lower = j == n - 1 || y[j + 1] < y[i];
        if left_lower
            && right_lower
            && i > 0
            && j < n - 1
            && prominence(&y, i) >= options.min_prominence * max
        {
            let x = if i == j && i > 0 && i + 1 < n {
                let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
                let denom = a - 2.0 * b + c;
                let off = if denom != 0.0 {
                    0.5 * (a - c) / denom
                } else {
                    0.0
                };
                h.center(i) + off.clamp(-0.5, 0.5) * h.width()
            } else {
                h.center(i)
            };
            cands.push((x, y[i]));
        }
        i = j + 1;
    }

    // Merge peaks closer than min_separation, keeping the taller.
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| {
        cands[b]
            .1
            .total_cmp(&cands[a].1)
            .then(cands[a].0.total_cmp(&cands[b].0))
    });
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for k in order {
        if kept
            .iter()
            .all(|p| (p.0 - cands[k].0).abs() >= min_separation)
        {
            kept.push(cands[k]);
        }
    }
    let mut xs: Vec<f64> = kept.into_iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: Vec<f64>) -> Histogram {
        let n = counts.len();
        Histogram {
            lo: 0.0,
            hi: n as f64,
            counts,
        }
    }

    fn gaussian_bumps(centers: &[f64], n: usize) -> Histogram {
        hist(
            (0..n)
                .map(|i| {
                    let x = i as f64 + 0.5;
                    centers
                        .iter()
                        .map(|c| 1000.0 * (-(x - c) * (x - c) / 8.0).exp())
                        .sum()
                })
                .collect(),
        )
    }

    #[test]
    fn two_bumps() {
        let p = peak_positions(
            &gaussian_bumps(&[10.5, 30.5], 40),
            2.0,
            PeakOptions::default(),
        );
        assert_eq!(p.len(), 2);
        assert!(
            (p[0] - 10.5).abs() < 0.1 && (p[1] - 30.5).abs() < 0.1,
            "{p:?}"
        );
    }

    #[test]
    fn flat_has_no_peaks() {
        assert!(peak_positions(&hist(vec![5.0; 32]), 1.0, PeakOptions::default()).is_empty());
        assert!(peak_positions(&hist(vec![0.0; 32]), 1.0, PeakOptions::default()).is_empty());
    }

    #[test]
    fn small_wiggles_ignored() {
        let mut counts: Vec<f64> = gaussian_bumps(&[20.5], 40).counts;
        counts[5] += 3.0;
        let p = peak_positions(&hist(counts), 1.0, PeakOptions::default());
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn min_separation_merges() {
        let p = peak_positions(
            &gaussian_bumps(&[10.5, 30.5], 40),
            25.0,
            PeakOptions::default(),
        );
        assert_eq!(p.len(), 1);
        assert!((p[0] - 10.5).abs() < 0.1, "tie goes to smaller x: {p:?}");
    }
}

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Binning of the D0 screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Binning {
    pub fn histogram(
        &self,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Histogram, AnalysisError> {
        Histogram::from_values(self.lo, self.hi, self.bins, values)
    }
}

/// Fixed-width histogram over `[lo, hi)`; values outside are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self, AnalysisError> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(AnalysisError::Invalid(format!(
                "histogram needs bins >= 1 and lo < hi (got {bins} bins over [{lo}, {hi}))"
            )));
        }
        Ok(Histogram {
            lo,
            hi,
            counts: vec![0.0; bins],
        })
    }

    pub fn from_values(
        lo: f64,
        hi: f64,
        bins: usize,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self, AnalysisError> {
        let mut h = Histogram::new(lo, hi, bins)?;
        for v in values {
            h.fill(v);
        }
        Ok(h)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.bins() - 1))
    }

    pub fn fill(&mut self, x: f64) {
        if let Some(i) = self.bin_of(x) {
            self.counts[i] += 1.0;
        }
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + w * i as f64, self.lo + w * (i + 1) as f64)
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + self.width() * (i as f64 + 0.5)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins()).map(|i| self.center(i)).collect()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Bin-wise sum of two histograms with identical binning.
    pub fn merged(&self, other: &Histogram) -> Result<Histogram, AnalysisError> {
        if self.lo != other.lo || self.hi != other.hi || self.bins() != other.bins() {
            return Err(AnalysisError::Invalid(
                "cannot merge histograms with different binning".into(),
            ));
        }
        Ok(Histogram {
            lo: self.lo,
            hi: self.hi,
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

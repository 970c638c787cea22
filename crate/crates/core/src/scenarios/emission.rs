use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// Stream id reserved for emission-time draws; emission substreams use the
/// emission index.
const TIMING_STREAM: u64 = u64::MAX;

/// Independent random substream for one emission.
///
/// Keyed by `(seed, emission index)`, so any partition of the emissions into
/// chunks reproduces the same draws.
pub fn emission_rng(seed: u64, emission_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(emission_index);
    rng
}

/// How emissions are spaced in lab time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// Fixed interval.
    IntervalS(f64),
    /// Poisson process.
    RateHz(f64),
    /// Intervals repeat through the list; the first emission is at 0.
    IntervalCycleS(Vec<f64>),
    /// Explicit emission times.
    TimesS(Vec<f64>),
}

impl Timing {
    pub fn validate(&self, n_emissions: u64) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match self {
            Timing::IntervalS(v) if !positive(*v) => {
                bad(format!("interval_s must be > 0, got {v}"))
            }
            Timing::RateHz(v) if !positive(*v) => bad(format!("rate_hz must be > 0, got {v}")),
            Timing::IntervalCycleS(v) if v.is_empty() || !v.iter().all(|x| positive(*x)) => {
                bad("interval_cycle_s must be a non-empty list of positive intervals".into())
            }
            Timing::TimesS(v) => {
                if (v.len() as u64) < n_emissions {
                    return bad(format!(
                        "times_s lists {} emissions, {} requested",
                        v.len(),
                        n_emissions
                    ));
                }
                if v.iter().any(|t| !t.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("times_s must be finite and strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionPlan {
    pub n_emissions: u64,
    pub timing: Timing,
    pub seed: u64,
}

impl EmissionPlan {
    pub fn new(n_emissions: u64, timing: Timing, seed: u64) -> Result<Self, ScenarioError> {
        if n_emissions == 0 {
            return Err(ScenarioError::Invalid("n_emissions must be >= 1".into()));
        }
        timing.validate(n_emissions)?;
        Ok(EmissionPlan {
            n_emissions,
            timing,
            seed,
        })
    }

    /// Strictly increasing emission times.
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_emissions as usize;
        match &self.timing {
            Timing::IntervalS(dt) => (0..n).map(|i| i as f64 * dt).collect(),
            Timing::RateHz(rate) => {
                let mut rng = emission_rng(self.seed, TIMING_STREAM);
                let mut t = 0.0;
                (0..n)
                    .map(|i| {
                        if i > 0 {
                            let u: f64 = rng.random();
                            t += -(1.0 - u).ln() / rate;
                        }
                        t
                    })
                    .collect()
            }
            Timing::IntervalCycleS(cycle) => {
                let mut t = 0.0;
                (0..n)
                    .map(|i| {
                        if i > 0 {
                            t += cycle[(i - 1) % cycle.len()];
                        }
                        t
                    })
                    .collect()
            }
            Timing::TimesS(ts) => ts[..n].to_vec(),
        }
    }
}

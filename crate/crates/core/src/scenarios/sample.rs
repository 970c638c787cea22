use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    effective_setting, emission_rng, setting_at, BiphotonScenario, ConjectureModel, ScenarioError,
    Setting,
};
use crate::optics::Source;

/// Detector id of the local signal screen.
pub const D0: &str = "D0";

/// One photon detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub emission_index: u64,
    pub detector: String,
    /// Lab-frame detection time, seconds.
    pub t: f64,
    /// Transverse position on the D0 screen, metres.
    pub x: Option<f64>,
    /// Ground truth: for D0 the setting that governed its pattern, for idler
    /// detectors the setting in force when the idler arrived.
    pub setting: Setting,
}

impl DetectionEvent {
    pub fn is_signal(&self) -> bool {
        self.detector == D0
    }
}

/// Timing context of one emission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub index: u64,
    pub t_emit: f64,
    /// Time since the previous emission; infinite for the first.
    pub tau_prev: f64,
}

/// Draws `x` from `(E_A^2 + E_B^2)/2` restricted to the grid.
fn sample_incoherent<R: Rng + ?Sized>(scn: &BiphotonScenario, rng: &mut R) -> f64 {
    let s = &scn.signal;
    let sd = s.envelope_sigma_m * FRAC_1_SQRT_2;
    loop {
        let source = if rng.random::<bool>() {
            Source::A
        } else {
            Source::B
        };
        let z: f64 = rng.sample(StandardNormal);
        let x = s.center(source) + sd * z;
        if scn.grid.contains(x) {
            return x;
        }
    }
}

/// Draws `x` from `I(x) + V·C(x)·cos(2φ(x) + ψ)` by thinning `I`.
fn sample_conjectured<R: Rng + ?Sized>(
    scn: &BiphotonScenario,
    visibility: f64,
    phase: f64,
    rng: &mut R,
) -> f64 {
    let s = &scn.signal;
    loop {
        let x = sample_incoherent(scn, rng);
        if visibility == 0.0 {
            return x;
        }
        let ratio = s.coherent(x) / s.incoherent(x);
        let weight = 1.0 + visibility * ratio * (2.0 * s.half_phase(x) + phase).cos();
        let u: f64 = rng.random();
        if u * (1.0 + visibility) < weight {
            return x;
        }
    }
}

fn pick<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Realizes one emission as a D0 event followed by its idler event.
///
/// For conjecture models the first draw from `rng` is the effective-setting
/// jitter, which lets the annotation be recomputed offline.
pub fn sample_emission(
    scn: &BiphotonScenario,
    model: &ConjectureModel,
    kappa: f64,
    emission: Emission,
    rng: &mut ChaCha8Rng,
) -> Result<[DetectionEvent; 2], ScenarioError> {
    let t_det = emission.t_emit + scn.signal_delay_s();
    let arrival = setting_at(
        &scn.schedule,
        emission.t_emit + scn.schedule.travel_time_s(),
    );
    let idler = scn.density(arrival);

    let (x, d0_setting) = if model.is_baseline() {
        (sample_incoherent(scn, rng), arrival)
    } else {
        let eff = effective_setting(model, kappa, &scn.schedule, t_det, rng)?;
        let p_mark = model.marking_probability.at(t_det);
        let marked = rng.random::<f64>() < p_mark;
        let visibility = if eff == Setting::Mark || marked {
            0.0
        } else {
            model.conjectured_visibility * model.hyperwave_factor(emission.tau_prev)
        };
        (
            sample_conjectured(scn, visibility, model.fringe_phase_rad, rng),
            eff,
        )
    };

    let mut probs = Vec::with_capacity(4);
    idler.conditional(x, &mut probs);
    let k = pick(&probs, rng);
    let tc = idler.coefficients();

    Ok([
        DetectionEvent {
            emission_index: emission.index,
            detector: D0.to_string(),
            t: t_det,
            x: Some(x),
            setting: d0_setting,
        },
        DetectionEvent {
            emission_index: emission.index,
            detector: tc.detectors()[k].clone(),
            t: emission.t_emit + tc.delay_at(k),
            x: None,
            setting: arrival,
        },
    ])
}

/// Generates the full event stream in emission order, using all available
/// threads.
pub fn run_scenario(
    scn: &BiphotonScenario,
    model: &ConjectureModel,
    seed: u64,
    n: u64,
) -> Result<Vec<DetectionEvent>, ScenarioError> {
    run_scenario_chunked(scn, model, seed, n, rayon::current_num_threads().max(1))
}

/// As [`run_scenario`] with an explicit number of chunks. The output does not
/// depend on `chunks`.
pub fn run_scenario_chunked(
    scn: &BiphotonScenario,
    model: &ConjectureModel,
    seed: u64,
    n: u64,
    chunks: usize,
) -> Result<Vec<DetectionEvent>, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::Invalid("N must be >= 1".into()));
    }
    let kappa = model.kappa(scn.geometry.signal_path_m, scn.geometry.remote_distance_m)?;
    model.validate(scn.geometry.signal_path_m, scn.geometry.remote_distance_m)?;

    let mut plan = scn.emission.clone();
    plan.n_emissions = n;
    plan.seed = seed;
    plan.timing.validate(n)?;
    let times = plan.times();

    let n = n as usize;
    let chunks = chunks.clamp(1, n);
    let per_chunk = n.div_ceil(chunks);
    let parts: Vec<Result<Vec<DetectionEvent>, ScenarioError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * per_chunk;
            let hi = ((c + 1) * per_chunk).min(n);
            let mut out = Vec::with_capacity(2 * hi.saturating_sub(lo));
            for i in lo..hi {
                let emission = Emission {
                    index: i as u64,
                    t_emit: times[i],
                    tau_prev: if i == 0 {
                        f64::INFINITY
                    } else {
                        times[i] - times[i - 1]
                    },
                };
                let mut rng = emission_rng(seed, i as u64);
                out.extend(sample_emission(scn, model, kappa, emission, &mut rng)?);
            }
            Ok(out)
        })
        .collect();
    let mut events = Vec::with_capacity(2 * n);
    for p in parts {
        events.extend(p?);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{GraphPreset, SignalArmModel};
    use crate::scenarios::{
        EmissionPlan, Geometry, ModelKind, ScheduleChange, Timing, TriggerSchedule,
    };

    fn scenario(schedule: TriggerSchedule) -> BiphotonScenario {
        let signal = SignalArmModel::default().centred();
        let grid = signal.default_grid();
        BiphotonScenario::new(
            signal,
            grid,
            GraphPreset::RemoteEraser { length_m: 30.0 }.build(),
            Some(GraphPreset::Straightline { length_m: 30.0 }.build()),
            Geometry {
                signal_path_m: 1.0,
                d0_position_m: [1.0, 0.0, 0.0],
                detector_positions_m: Default::default(),
                remote_distance_m: 30.0,
            },
            EmissionPlan::new(1, Timing::IntervalS(1e-3), 0).unwrap(),
            schedule,
        )
        .unwrap()
    }

    #[test]
    fn events_are_paired_and_timed() {
        let scn = scenario(TriggerSchedule::new(vec![], 30.0).unwrap());
        let model = ConjectureModel::new(ModelKind::QmBaseline);
        let ev = run_scenario_chunked(&scn, &model, 3, 100, 1).unwrap();
        assert_eq!(ev.len(), 200);
        for (i, pair) in ev.chunks(2).enumerate() {
            assert_eq!(pair[0].emission_index, i as u64);
            assert_eq!(pair[1].emission_index, i as u64);
            assert!(pair[0].is_signal() && pair[0].x.is_some());
            assert!(pair[1].x.is_none());
            assert!(["E1", "E2"].contains(&pair[1].detector.as_str()));
            let t_emit = i as f64 * 1e-3;
            assert_eq!(pair[0].t, t_emit + scn.signal_delay_s());
            assert_eq!(
                pair[1].t,
                t_emit + scn.idler_delay(&pair[1].detector).unwrap()
            );
            assert!(scn.grid.contains(pair[0].x.unwrap()));
        }
    }

    #[test]
    fn chunking_is_transparent() {
        let scn = scenario(TriggerSchedule::new(vec![], 30.0).unwrap());
        let mut model = ConjectureModel::new(ModelKind::FutureHs);
        model.jitter_sigma_s = 1e-4;
        model.marking_probability = crate::scenarios::MarkingProbability::Constant(0.3);
        let one = run_scenario_chunked(&scn, &model, 11, 1000, 1).unwrap();
        let eight = run_scenario_chunked(&scn, &model, 11, 1000, 8).unwrap();
        let odd = run_scenario_chunked(&scn, &model, 11, 1000, 7).unwrap();
        assert_eq!(one, eight);
        assert_eq!(one, odd);
        let other = run_scenario_chunked(&scn, &model, 12, 1000, 1).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn annotations_recompute_offline() {
        let sched = TriggerSchedule::new(
            vec![ScheduleChange {
                t_send_s: 0.25,
                setting: Setting::Mark,
            }],
            30.0,
        )
        .unwrap();
        let scn = scenario(sched);
        for kind in [ModelKind::FutureHs, ModelKind::PresentHs] {
            let mut model = ConjectureModel::new(kind);
            model.jitter_sigma_s = 0.05;
            let kappa = model.kappa(1.0, 30.0).unwrap();
            let ev = run_scenario_chunked(&scn, &model, 5, 500, 3).unwrap();
            for e in ev.iter().filter(|e| e.is_signal()) {
                let mut rng = emission_rng(5, e.emission_index);
                let again = effective_setting(&model, kappa, &scn.schedule, e.t, &mut rng).unwrap();
                assert_eq!(e.setting, again);
            }
            let marks = ev
                .iter()
                .filter(|e| e.is_signal() && e.setting == Setting::Mark)
                .count();
            assert!(marks > 100 && marks < 400, "{marks}");
        }
    }

    #[test]
    fn qm_annotation_is_arrival_setting() {
        let d = 30.0;
        let sched = TriggerSchedule::new(
            vec![ScheduleChange {
                t_send_s: 0.2,
                setting: Setting::Mark,
            }],
            d,
        )
        .unwrap();
        let scn = scenario(sched.clone());
        let ev = run_scenario_chunked(
            &scn,
            &ConjectureModel::new(ModelKind::QmBaseline),
            1,
            400,
            2,
        )
        .unwrap();
        for pair in ev.chunks(2) {
            let t_emit = pair[0].emission_index as f64 * 1e-3;
            let want = setting_at(&sched, t_emit + sched.travel_time_s());
            assert_eq!(pair[0].setting, want);
            assert_eq!(pair[1].setting, want);
            let remote_ids: &[&str] = if want == Setting::Mark {
                &["R0_A", "R0_B"]
            } else {
                &["E1", "E2"]
            };
            assert!(remote_ids.contains(&pair[1].detector.as_str()));
        }
    }
}

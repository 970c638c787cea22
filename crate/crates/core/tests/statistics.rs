mod common;

use common::{d0_positions, preset, remote_qm};
use dcqe_core::analysis::{ks_two_sample, OnsetVerdict};
use dcqe_core::report::analyze;
use dcqe_core::scenarios::{MarkingProbability, ModelKind};

#[test]
fn qm_d0_does_not_see_the_remote_setting() {
    let erase = remote_qm(1_000_000, 11, &[]);
    let mark = remote_qm(1_000_000, 12, &[(0.0, "MARK")]);
    let a = d0_positions(&erase.simulate().unwrap());
    let b = d0_positions(&mark.simulate().unwrap());
    let ks = ks_two_sample(&a, &b).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn future_hs_visibility_collapses_after_the_trigger() {
    let cfg = preset("remote_trigger");
    let r = analyze(&cfg, &cfg.simulate().unwrap()).unwrap();
    let series = &r.onset.as_ref().unwrap().series;
    let mean = |f: &dyn Fn(f64) -> bool| {
        let v: Vec<f64> = series
            .iter()
            .filter(|p| f(p.t_start))
            .map(|p| p.visibility)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let before = mean(&|t| t < 9.0);
    let after = mean(&|t| t > 11.0);
    assert!(before - after >= 0.9, "before {before} after {after}");
}

#[test]
fn jitter_leaves_steady_stretches_unchanged() {
    let sigma = 0.2;
    let mut plain = preset("remote_trigger");
    plain.seed = 3;
    let mut jittered = plain.clone();
    jittered.seed = 4;
    jittered.model.jitter_sigma_s = sigma;
    let built = plain.build().unwrap();
    let shift = built.kappa * built.scenario.schedule.travel_time_s();
    let t_send = built.scenario.schedule.first_send().unwrap();
    // Events whose effective time stays 4σ clear of the change.
    let steady = |events: Vec<dcqe_core::scenarios::DetectionEvent>| -> Vec<f64> {
        events
            .into_iter()
            .filter(|e| e.is_signal() && (e.t + shift - t_send).abs() > 4.0 * sigma)
            .filter_map(|e| e.x)
            .collect()
    };
    let a = steady(plain.simulate().unwrap());
    let b = steady(jittered.simulate().unwrap());
    assert!(a.len() > 20_000 && b.len() > 20_000);
    let ks = ks_two_sample(&a, &b).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn onsets_are_ordered_by_model() {
    let run = |kind: ModelKind, kappa: Option<f64>| {
        let mut cfg = preset("remote_trigger");
        cfg.model.kind = kind;
        cfg.model.kappa = kappa;
        let r = analyze(&cfg, &cfg.simulate().unwrap()).unwrap();
        let onset = r.onset.unwrap();
        (onset.t_hat.unwrap(), onset.ci, onset.model_verdict)
    };
    let f = run(ModelKind::FutureHs, None);
    let p = run(ModelKind::PresentHs, None);
    let q = run(ModelKind::PastHs, Some(-1.0));
    assert!(f.0 < p.0 && p.0 < q.0, "{f:?} {p:?} {q:?}");
    let travel = 5.0;
    assert!(((p.0 - f.0) - travel).abs() <= f.1 + p.1, "{f:?} {p:?}");
    assert!(((q.0 - p.0) - travel).abs() <= p.1 + q.1, "{p:?} {q:?}");
    assert_eq!(
        [f.2, p.2, q.2],
        [
            OnsetVerdict::FutureHs,
            OnsetVerdict::PresentHs,
            OnsetVerdict::PastHs
        ]
    );
}

#[test]
fn doubling_n_shrinks_the_marking_interval() {
    let width = |n: u64, seed: u64| {
        let mut cfg = preset("solar_burst_scan");
        cfg.seed = seed;
        cfg.n_emissions = n;
        cfg.model.marking_probability = MarkingProbability::Constant(0.5);
        cfg.analysis.scan_positions = 1;
        cfg.analysis.bootstrap_resamples = 1000;
        let r = analyze(&cfg, &cfg.simulate().unwrap()).unwrap();
        let m = r.marking.unwrap().overall;
        m.ci_high - m.ci_low
    };
    let seeds = [1, 2, 3, 4];
    let w1: f64 = seeds.iter().map(|&s| width(50_000, s)).sum();
    let w2: f64 = seeds.iter().map(|&s| width(100_000, s)).sum();
    let ratio = w2 / w1;
    let target = std::f64::consts::FRAC_1_SQRT_2;
    assert!((ratio - target).abs() <= 0.2 * target, "ratio {ratio}");
}

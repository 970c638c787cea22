mod common;

use common::{graph_from_ops, longest_path_m, preset, Op};
use dcqe_core::analysis::{ks_two_sample, match_coincidences, mi_from_table, MiOptions};
use dcqe_core::config::{preset_names, ScenarioConfig};
use dcqe_core::optics::{
    build_path_graph, transfer_coefficients, validate_unitarity, GraphPreset, JointDensity,
    SignalArmModel,
};
use dcqe_core::scenarios::run_scenario_chunked;
use dcqe_core::spacetime::{
    classify_interval, squared_interval, verdict_for, AuditVerdict, IntervalKind, SpacetimeEvent,
};
use dcqe_core::stream::{read_events, write_events};
use dcqe_core::SPEED_OF_LIGHT;
use proptest::prelude::*;

fn op() -> impl Strategy<Value = Op> {
    (0u8..3, 0usize..16, 0usize..16, 0.0f64..20.0).prop_map(|(kind, i, j, length_m)| Op {
        kind,
        i,
        j,
        length_m,
    })
}

fn signal() -> impl Strategy<Value = SignalArmModel> {
    (
        1e-4f64..1e-3,
        -5e-4f64..5e-4,
        -5e-4f64..5e-4,
        1e-3f64..5e-3,
        -3.0f64..3.0,
    )
        .prop_map(|(sigma, ca, cb, d, phase)| SignalArmModel {
            envelope_sigma_m: sigma,
            envelope_center_a_m: ca,
            envelope_center_b_m: cb,
            slit_separation_m: d,
            source_phase_rad: phase,
            ..Default::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_graphs_are_unitary_and_leave_d0_alone(ops in prop::collection::vec(op(), 1..24), s in signal()) {
        let cfg = graph_from_ops(&ops);
        let graph = build_path_graph(cfg).unwrap();
        let tc = transfer_coefficients(&graph);
        let u = validate_unitarity(&tc);
        prop_assert!(u.passed, "{u:?}");

        let grid = s.default_grid();
        let reference = JointDensity::new(&s, &transfer_coefficients(&GraphPreset::Kim1999.build()), grid).unwrap();
        let random = JointDensity::new(&s, &tc, grid).unwrap();
        for x in grid.xs().step_by(31) {
            let (a, b) = (reference.marginal(x), random.marginal(x));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "x {x}: {a} vs {b}");
        }
    }

    #[test]
    fn delays_are_longest_path_over_c(ops in prop::collection::vec(op(), 1..24)) {
        let cfg = graph_from_ops(&ops);
        let tc = transfer_coefficients(&build_path_graph(cfg.clone()).unwrap());
        for (det, port) in &cfg.detectors {
            let expect = longest_path_m(&cfg, port).unwrap() / SPEED_OF_LIGHT;
            let got = tc.delay(det).unwrap();
            prop_assert!((got - expect).abs() <= 1e-15 * expect.max(1e-9), "{det}: {got} vs {expect}");
        }
    }

    #[test]
    fn interval_class_is_antisymmetric(
        t in -1e-6f64..1e-6, x in -300.0f64..300.0, y in -300.0f64..300.0, z in -300.0f64..300.0,
    ) {
        let a = SpacetimeEvent::new("a", 0.0, [0.0; 3]);
        let b = SpacetimeEvent::new("b", t, [x, y, z]);
        let ab = classify_interval(&a, &b, 0.0).kind;
        let ba = classify_interval(&b, &a, 0.0).kind;
        prop_assert_eq!(ab == IntervalKind::TimelikeFuture, ba == IntervalKind::TimelikePast);
        prop_assert_eq!(ab == IntervalKind::Spacelike, ba == IntervalKind::Spacelike);
    }

    #[test]
    fn squared_interval_is_a_lorentz_scalar(
        t1 in -1e-6f64..1e-6, p1 in prop::array::uniform3(-100.0f64..100.0),
        t2 in -1e-6f64..1e-6, p2 in prop::array::uniform3(-100.0f64..100.0),
        beta in 0.0f64..0.9, theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let v = [
            beta * SPEED_OF_LIGHT * theta.sin() * phi.cos(),
            beta * SPEED_OF_LIGHT * theta.sin() * phi.sin(),
            beta * SPEED_OF_LIGHT * theta.cos(),
        ];
        let a = SpacetimeEvent::new("a", t1, p1);
        let b = SpacetimeEvent::new("b", t2, p2);
        let s = squared_interval(&a, &b);
        let s_boosted = squared_interval(&a.boosted(v), &b.boosted(v));
        // Scale: the larger of the two terms of s².
        let dt = t2 - t1;
        let dx2: f64 = (0..3).map(|k| (p2[k] - p1[k]).powi(2)).sum();
        let scale = (dt * dt).max(dx2 / (SPEED_OF_LIGHT * SPEED_OF_LIGHT)).max(1e-300);
        prop_assert!((s - s_boosted).abs() <= 1e-9 * scale, "{s} vs {s_boosted}");
    }

    #[test]
    fn verdict_moves_outward_with_distance(dt in 1e-9f64..1e-6, r1 in 0.0f64..400.0, extra in 0.0f64..400.0) {
        let rank = |v: AuditVerdict| match v {
            AuditVerdict::ParadoxTopology => 0,
            AuditVerdict::OnCone => 1,
            AuditVerdict::OutsideCone => 2,
        };
        let d0 = SpacetimeEvent::new("D0", 0.0, [0.0; 3]);
        let verdict = |r: f64| {
            let idler = SpacetimeEvent::new("I", dt, [r, 0.0, 0.0]);
            verdict_for([classify_interval(&d0, &idler, 1e-11).kind])
        };
        prop_assert!(rank(verdict(r1)) <= rank(verdict(r1 + extra)));
    }

    #[test]
    fn mutual_information_is_bounded(
        table in prop::collection::vec(prop::collection::vec(0u64..500, 8), 2..4), seed in any::<u64>(),
    ) {
        prop_assume!(table.iter().filter(|r| r.iter().any(|&k| k > 0)).count() >= 2);
        let est = mi_from_table(&table, MiOptions { resamples: 40, seed, ..Default::default() }).unwrap();
        let rows = table.len() as f64;
        prop_assert!(est.mi_bits >= 0.0 && est.mi_bits <= rows.log2() + 1.0);
        prop_assert!(est.ci_low <= est.mi_bits && est.mi_bits <= est.ci_high);
    }

    #[test]
    fn ks_is_symmetric(a in prop::collection::vec(-1.0f64..1.0, 1..60), b in prop::collection::vec(-1.0f64..1.0, 1..60)) {
        let ab = ks_two_sample(&a, &b).unwrap();
        let ba = ks_two_sample(&b, &a).unwrap();
        prop_assert_eq!(ab.statistic, ba.statistic);
        prop_assert!((0.0..=1.0).contains(&ab.p_value) && (0.0..=1.0).contains(&ab.statistic));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn config_round_trips(idx in 0usize..7, seed in 0u64..=i64::MAX as u64, n in 1u64..1_000_000) {
        let names = preset_names();
        let mut cfg = preset(&names[idx % names.len()]);
        cfg.seed = seed;
        cfg.n_emissions = n.max(cfg.n_emissions.min(n));
        if cfg.validate().is_err() {
            return Ok(());
        }
        let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_toml_string(), cfg.to_toml_string());
        prop_assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn chunking_never_changes_the_stream(idx in 0usize..7, seed in 0u64..1000, chunks in 1usize..17) {
        let names = preset_names();
        let mut cfg = preset(&names[idx % names.len()]);
        cfg.seed = seed;
        cfg.n_emissions = 300;
        if cfg.validate().is_err() {
            return Ok(());
        }
        let built = cfg.build().unwrap();
        let a = run_scenario_chunked(&built.scenario, &built.model, seed, 300, 1).unwrap();
        let b = run_scenario_chunked(&built.scenario, &built.model, seed, 300, chunks).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn stream_text_is_a_fixed_point(idx in 0usize..7, seed in 0u64..1000) {
        let names = preset_names();
        let mut cfg = preset(&names[idx % names.len()]);
        cfg.seed = seed;
        cfg.n_emissions = 200;
        if cfg.validate().is_err() {
            return Ok(());
        }
        let events = cfg.simulate().unwrap();
        let mut first = Vec::new();
        write_events(&mut first, &cfg, &events).unwrap();
        let (header, back) = read_events(first.as_slice()).unwrap();
        prop_assert_eq!(&header.config, &cfg);
        let mut second = Vec::new();
        write_events(&mut second, &header.config, &back).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn generator_pairs_are_recovered(idx in 0usize..7, seed in 0u64..1000) {
        let names = preset_names();
        let mut cfg = preset(&names[idx % names.len()]);
        cfg.seed = seed;
        cfg.n_emissions = 400;
        if cfg.validate().is_err() {
            return Ok(());
        }
        let built = cfg.build().unwrap();
        let scn = &built.scenario;
        let events = cfg.simulate().unwrap();
        let (d0, idler): (Vec<_>, Vec<_>) = events.into_iter().partition(|e| e.is_signal());
        let sd = scn.signal_delay_s();
        let pairs = match_coincidences(&d0, &idler, 3e-9, |d| {
            if d == "D0" { sd } else { scn.idler_delay(d).unwrap() }
        })
        .unwrap();
        prop_assert_eq!(pairs.len(), d0.len());
        for p in &pairs {
            prop_assert_eq!(p.signal_event.emission_index, p.idler_event.emission_index);
        }
    }
}

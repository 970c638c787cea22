//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dcqe_core::config::{preset_source, ScenarioConfig};
use dcqe_core::optics::{GraphConfig, OpticalElement, DEFAULT_WAVELENGTH_M};

/// One construction step of a random idler graph.
#[derive(Debug, Clone, Copy)]
pub struct Op {
    pub kind: u8,
    pub i: usize,
    pub j: usize,
    pub length_m: f64,
}

/// Builds an acyclic graph by applying `ops` to the set of open ports, then
/// terminating every open port on its own detector.
///
/// Segments and mirrors act on one open port; beamsplitters join two open
/// ports, or one open port and a fresh vacuum input.
pub fn graph_from_ops(ops: &[Op]) -> GraphConfig {
    let mut open = vec!["idler_a".to_string(), "idler_b".to_string()];
    let mut elements = Vec::new();
    let mut vacuum = Vec::new();
    for (n, op) in ops.iter().enumerate() {
        let i = op.i % open.len();
        match op.kind % 3 {
            0 => {
                let out = format!("p{n}");
                elements.push(OpticalElement::segment(
                    &format!("seg{n}"),
                    &open[i],
                    &out,
                    op.length_m,
                ));
                open[i] = out;
            }
            1 => {
                let out = format!("p{n}");
                elements.push(OpticalElement::mirror(&format!("m{n}"), &open[i], &out));
                open[i] = out;
            }
            _ => {
                let (o1, o2) = (format!("p{n}a"), format!("p{n}b"));
                let first = open[i].clone();
                let second = if open.len() >= 2 && op.j % 4 != 0 {
                    let mut j = op.j % open.len();
                    if j == i {
                        j = (j + 1) % open.len();
                    }
                    let s = open[j].clone();
                    open.remove(j);
                    s
                } else {
                    let v = format!("vac{n}");
                    vacuum.push(v.clone());
                    v
                };
                let pos = open.iter().position(|p| *p == first).unwrap();
                open[pos] = o1.clone();
                open.push(o2.clone());
                elements.push(OpticalElement::beamsplitter(
                    &format!("bs{n}"),
                    [&first, &second],
                    [&o1, &o2],
                ));
            }
        }
    }
    let detectors: BTreeMap<String, String> = open
        .iter()
        .enumerate()
        .map(|(k, p)| (format!("K{k}"), p.clone()))
        .collect();
    GraphConfig {
        wavelength_m: DEFAULT_WAVELENGTH_M,
        source_a: "idler_a".into(),
        source_b: "idler_b".into(),
        elements,
        detectors,
        vacuum,
    }
}

/// Longest source-to-port length by explicit path enumeration.
pub fn longest_path_m(cfg: &GraphConfig, port: &str) -> Option<f64> {
    if port == cfg.source_a || port == cfg.source_b {
        return Some(0.0);
    }
    let el = cfg
        .elements
        .iter()
        .find(|e| e.outputs.iter().any(|o| o == port))?;
    el.inputs
        .iter()
        .filter_map(|p| longest_path_m(cfg, p))
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })
        .map(|v| v + el.length_m)
}

pub fn preset(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(&preset_source(name).unwrap()).unwrap()
}

/// Preset with its TOML text edited by `edit`.
pub fn preset_with(name: &str, edit: impl FnOnce(String) -> String) -> ScenarioConfig {
    let src = edit(preset_source(name).unwrap());
    ScenarioConfig::from_toml_str(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// QM run on a 3 km remote eraser whose setting follows `changes`
/// (`(t_send_s, setting)` pairs). The mark graph sends both idler regions
/// straight to a screen.
pub fn remote_qm(n: u64, seed: u64, changes: &[(f64, &str)]) -> ScenarioConfig {
    let src = preset_source("solar_burst_scan").unwrap();
    let head = src.split("[model]").next().unwrap();
    let head = head
        .replace("interval_s = 1e-3", "interval_s = 1e-6")
        .replace(
            "E2 = [3000.0, 0.0, 0.0]",
            "E2 = [3000.0, 0.0, 0.0]\nR0_A = [3000.0, 0.0, 0.0]\nR0_B = [3000.0, 0.0, 0.0]",
        )
        .replace(
            "[signal]",
            "[mark_graph]\npreset = \"straightline\"\nlength_m = 3000.0\n\n[signal]",
        );
    let schedule: Vec<String> = changes
        .iter()
        .map(|(t, s)| format!("{{ t_send_s = {t:?}, setting = \"{s}\" }}"))
        .collect();
    let src = format!(
        "{head}[model]\nkind = \"QM_BASELINE\"\n\n[schedule]\nchanges = [{}]\n",
        schedule.join(", ")
    );
    let mut cfg = ScenarioConfig::from_toml_str(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    cfg.name = Some("remote_qm".into());
    cfg.seed = seed;
    cfg.n_emissions = n;
    cfg
}

/// D0 positions of a simulated event list.
pub fn d0_positions(events: &[dcqe_core::scenarios::DetectionEvent]) -> Vec<f64> {
    events
        .iter()
        .filter(|e| e.is_signal())
        .filter_map(|e| e.x)
        .collect()
}

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::OpticsError;

/// Kind of a passive optical element in the idler arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    /// Lossless 50/50 beamsplitter, two inputs and two outputs.
    #[serde(rename = "beamsplitter_5050")]
    Beamsplitter5050,
    #[serde(rename = "mirror")]
    Mirror,
    /// Free propagation over `length_m`.
    #[serde(rename = "phase_segment")]
    PhaseSegment,
}

impl ElementKind {
    fn port_counts(self) -> (usize, usize) {
        match self {
            ElementKind::Beamsplitter5050 => (2, 2),
            ElementKind::Mirror | ElementKind::PhaseSegment => (1, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalElement {
    pub id: String,
    pub kind: ElementKind,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub length_m: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl OpticalElement {
    pub fn segment(id: &str, input: &str, output: &str, length_m: f64) -> Self {
        OpticalElement {
            id: id.into(),
            kind: ElementKind::PhaseSegment,
            inputs: vec![input.into()],
            outputs: vec![output.into()],
            length_m,
        }
    }

    pub fn mirror(id: &str, input: &str, output: &str) -> Self {
        OpticalElement {
            id: id.into(),
            kind: ElementKind::Mirror,
            inputs: vec![input.into()],
            outputs: vec![output.into()],
            length_m: 0.0,
        }
    }

    pub fn beamsplitter(id: &str, inputs: [&str; 2], outputs: [&str; 2]) -> Self {
        OpticalElement {
            id: id.into(),
            kind: ElementKind::Beamsplitter5050,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            length_m: 0.0,
        }
    }
}

/// Declarative description of an idler arm, as written in scenario files.
///
/// Ports are plain names. Every port must have exactly one producer (a source
/// or an element output) and exactly one consumer (an element input or a
/// detector); unused beamsplitter inputs are declared in `vacuum`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub wavelength_m: f64,
    pub source_a: String,
    pub source_b: String,
    #[serde(default)]
    pub elements: Vec<OpticalElement>,
    pub detectors: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vacuum: Vec<String>,
}

/// A validated idler-arm graph. Elements are stored in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGraph {
    pub(crate) config: GraphConfig,
    pub(crate) order: Vec<usize>,
}

impl PathGraph {
    pub fn wavelength_m(&self) -> f64 {
        self.config.wavelength_m
    }

    pub fn config(&self) -> &GraphConfig {
        &self.config
    }

    pub fn detector_ids(&self) -> impl Iterator<Item = &str> {
        self.config.detectors.keys().map(String::as_str)
    }

    /// Elements in propagation order.
    pub fn elements(&self) -> impl Iterator<Item = &OpticalElement> {
        self.order.iter().map(move |&i| &self.config.elements[i])
    }
}

/// Validates a declarative graph.
pub fn build_path_graph(config: GraphConfig) -> Result<PathGraph, OpticsError> {
    if !(config.wavelength_m > 0.0 && config.wavelength_m.is_finite()) {
        return Err(OpticsError::InvalidWavelength(config.wavelength_m));
    }
    if config.detectors.is_empty() {
        return Err(OpticsError::NoDetectors);
    }

    let mut ids = BTreeSet::new();
    for el in &config.elements {
        if !ids.insert(el.id.as_str()) {
            return Err(OpticsError::DuplicateElement(el.id.clone()));
        }
        let (n_in, n_out) = el.kind.port_counts();
        if el.inputs.len() != n_in || el.outputs.len() != n_out {
            return Err(OpticsError::PortCount {
                element: el.id.clone(),
                expected: (n_in, n_out),
                found: (el.inputs.len(), el.outputs.len()),
            });
        }
        let bad_length = !el.length_m.is_finite()
            || el.length_m < 0.0
            || (el.kind != ElementKind::PhaseSegment && el.length_m != 0.0);
        if bad_length {
            return Err(OpticsError::InvalidLength {
                element: el.id.clone(),
                length_m: el.length_m,
            });
        }
    }

    // Producer of every port: None for sources, Some(element index) otherwise.
    let mut producer: HashMap<&str, Option<usize>> = HashMap::new();
    let source_ports = [config.source_a.as_str(), config.source_b.as_str()];
    if source_ports[0] == source_ports[1] {
        return Err(OpticsError::DuplicatePort {
            element: "<sources>".into(),
            port: config.source_a.clone(),
        });
    }
    for src in source_ports {
        producer.insert(src, None);
    }
    for (i, el) in config.elements.iter().enumerate() {
        for port in &el.outputs {
            if producer.insert(port.as_str(), Some(i)).is_some() {
                return Err(OpticsError::DuplicatePort {
                    element: el.id.clone(),
                    port: port.clone(),
                });
            }
        }
    }
    let vacuum: BTreeSet<&str> = config.vacuum.iter().map(String::as_str).collect();
    for v in &vacuum {
        if producer.contains_key(v) {
            return Err(OpticsError::DuplicatePort {
                element: "<vacuum>".into(),
                port: v.to_string(),
            });
        }
    }

    let mut consumer: HashMap<&str, String> = HashMap::new();
    for el in &config.elements {
        for port in &el.inputs {
            if let Some(prev) = consumer.insert(port.as_str(), el.id.clone()) {
                return Err(OpticsError::DuplicatePort {
                    element: prev,
                    port: port.clone(),
                });
            }
            if !producer.contains_key(port.as_str()) && !vacuum.contains(port.as_str()) {
                return Err(OpticsError::DanglingPort {
                    element: el.id.clone(),
                    port: port.clone(),
                });
            }
        }
    }
    for (det, port) in &config.detectors {
        if !producer.contains_key(port.as_str()) {
            return Err(OpticsError::DetectorUnreachable(det.clone()));
        }
        if let Some(prev) = consumer.insert(port.as_str(), det.clone()) {
            return Err(OpticsError::DuplicatePort {
                element: prev,
                port: port.clone(),
            });
        }
    }
    // Every produced port must lead somewhere.
    let mut produced: Vec<(&str, Option<usize>)> = producer.iter().map(|(p, e)| (*p, *e)).collect();
    produced.sort();
    for (port, by) in produced {
        if !consumer.contains_key(port) {
            let element = match by {
                Some(i) => config.elements[i].id.clone(),
                None => "<source>".into(),
            };
            return Err(OpticsError::DanglingPort {
                element,
                port: port.to_string(),
            });
        }
    }

    // Kahn's algorithm over element dependencies.
    let n = config.elements.len();
    let mut indegree = vec![0usize; n];
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, el) in config.elements.iter().enumerate() {
        for port in &el.inputs {
            if let Some(Some(i)) = producer.get(port.as_str()) {
                successors[*i].push(j);
                indegree[j] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &j in successors[i].iter().rev() {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(j);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(OpticsError::Cycle(config.elements[stuck].id.clone()));
    }

    // Reachability from the two sources.
    let mut live: BTreeSet<&str> = source_ports.iter().copied().collect();
    for &i in &order {
        let el = &config.elements[i];
        if el.inputs.iter().any(|p| live.contains(p.as_str())) {
            live.extend(el.outputs.iter().map(String::as_str));
        }
    }
    for (det, port) in &config.detectors {
        if !live.contains(port.as_str()) {
            return Err(OpticsError::DetectorUnreachable(det.clone()));
        }
    }

    Ok(PathGraph { config, order })
}

/// Named idler-arm layouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphPreset {
    /// Kim et al. eraser: BSA/BSB which-path splitters, mirrors MA/MB and the
    /// eraser beamsplitter BS in front of D1/D2.
    Kim1999,
    /// No mirrors or beamsplitters: each region feeds its own spot on one
    /// remote screen, `length_m` away.
    Straightline { length_m: f64 },
    /// Remote eraser: both regions meet on a beamsplitter `length_m` away.
    RemoteEraser { length_m: f64 },
    /// Idler folded once by a mirror; paired with a signal-side mirror in
    /// the scenario geometry.
    MirrorSignal { length_m: f64 },
}

pub const DEFAULT_WAVELENGTH_M: f64 = 702e-9;

impl GraphPreset {
    pub const NAMES: [&'static str; 4] =
        ["kim1999", "straightline", "remote_eraser", "mirror_signal"];

    /// Looks up a preset by name; `length_m` overrides the idler length where
    /// the preset has one.
    pub fn by_name(name: &str, length_m: Option<f64>) -> Option<Self> {
        Some(match name {
            "kim1999" => GraphPreset::Kim1999,
            "straightline" => GraphPreset::Straightline {
                length_m: length_m.unwrap_or(3.5),
            },
            "remote_eraser" => GraphPreset::RemoteEraser {
                length_m: length_m.unwrap_or(3.5),
            },
            "mirror_signal" => GraphPreset::MirrorSignal {
                length_m: length_m.unwrap_or(3.5),
            },
            _ => return None,
        })
    }

    pub fn config(self) -> GraphConfig {
        let seg = OpticalElement::segment;
        let (elements, detectors, vacuum): (Vec<OpticalElement>, Vec<(&str, &str)>, Vec<&str>) =
            match self {
                GraphPreset::Kim1999 => (
                    vec![
                        seg("seg_a_in", "idler_a", "a0", 0.6),
                        seg("seg_b_in", "idler_b", "b0", 0.6),
                        OpticalElement::beamsplitter("BSA", ["a0", "vac_a"], ["a_t", "a_r"]),
                        OpticalElement::beamsplitter("BSB", ["b0", "vac_b"], ["b_t", "b_r"]),
                        seg("seg_d3", "a_r", "d3", 0.7),
                        seg("seg_d4", "b_r", "d4", 0.7),
                        seg("seg_ma_in", "a_t", "a1", 1.2),
                        seg("seg_mb_in", "b_t", "b1", 1.2),
                        OpticalElement::mirror("MA", "a1", "a2"),
                        OpticalElement::mirror("MB", "b1", "b2"),
                        seg("seg_ma_out", "a2", "a3", 1.2),
                        seg("seg_mb_out", "b2", "b3", 1.2),
                        OpticalElement::beamsplitter("BS", ["a3", "b3"], ["o1", "o2"]),
                        seg("seg_d1", "o1", "d1", 0.5),
                        seg("seg_d2", "o2", "d2", 0.5),
                    ],
                    vec![("D1", "d1"), ("D2", "d2"), ("D3", "d3"), ("D4", "d4")],
                    vec!["vac_a", "vac_b"],
                ),
                GraphPreset::Straightline { length_m } => (
                    vec![
                        seg("seg_a", "idler_a", "ra", length_m),
                        seg("seg_b", "idler_b", "rb", length_m),
                    ],
                    vec![("R0_A", "ra"), ("R0_B", "rb")],
                    vec![],
                ),
                GraphPreset::RemoteEraser { length_m } => (
                    vec![
                        seg("seg_a", "idler_a", "a1", length_m),
                        seg("seg_b", "idler_b", "b1", length_m),
                        OpticalElement::beamsplitter("BS_remote", ["a1", "b1"], ["e1", "e2"]),
                    ],
                    vec![("E1", "e1"), ("E2", "e2")],
                    vec![],
                ),
                GraphPreset::MirrorSignal { length_m } => (
                    vec![
                        seg("seg_a_in", "idler_a", "a1", length_m / 2.0),
                        seg("seg_b_in", "idler_b", "b1", length_m / 2.0),
                        OpticalElement::mirror("MA", "a1", "a2"),
                        OpticalElement::mirror("MB", "b1", "b2"),
                        seg("seg_a_out", "a2", "ra", length_m / 2.0),
                        seg("seg_b_out", "b2", "rb", length_m / 2.0),
                    ],
                    vec![("R0_A", "ra"), ("R0_B", "rb")],
                    vec![],
                ),
            };
        GraphConfig {
            wavelength_m: DEFAULT_WAVELENGTH_M,
            source_a: "idler_a".into(),
            source_b: "idler_b".into(),
            elements,
            detectors: detectors
                .into_iter()
                .map(|(d, p)| (d.to_string(), p.to_string()))
                .collect(),
            vacuum: vacuum.into_iter().map(String::from).collect(),
        }
    }

    pub fn build(self) -> PathGraph {
        build_path_graph(self.config()).expect("preset graphs are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kim1999_wiring() {
        let g = GraphPreset::Kim1999.build();
        let dets: Vec<_> = g.detector_ids().collect();
        assert_eq!(dets, ["D1", "D2", "D3", "D4"]);
        let ids: Vec<_> = g.elements().map(|e| e.id.as_str()).collect();
        for name in ["BSA", "BSB", "BS", "MA", "MB"] {
            assert!(ids.contains(&name), "missing {name}");
        }
        let pos = |n: &str| ids.iter().position(|i| *i == n).unwrap();
        assert!(pos("BSA") < pos("MA") && pos("MA") < pos("BS"));
        assert!(pos("BSB") < pos("MB") && pos("MB") < pos("BS"));
    }

    #[test]
    fn identity_routing() {
        let cfg = GraphConfig {
            wavelength_m: 1e-6,
            source_a: "a".into(),
            source_b: "b".into(),
            elements: vec![],
            detectors: [
                ("DA".to_string(), "a".to_string()),
                ("DB".to_string(), "b".to_string()),
            ]
            .into(),
            vacuum: vec![],
        };
        let g = build_path_graph(cfg).unwrap();
        assert_eq!(g.detector_ids().count(), 2);
    }

    #[test]
    fn straightline_has_remote_ports_only() {
        let g = GraphPreset::Straightline { length_m: 10.0 }.build();
        assert_eq!(g.detector_ids().collect::<Vec<_>>(), ["R0_A", "R0_B"]);
        assert!(g.elements().all(|e| e.kind == ElementKind::PhaseSegment));
    }

    #[test]
    fn rejects_cycle() {
        let mut cfg = GraphPreset::Straightline { length_m: 1.0 }.config();
        cfg.elements.push(OpticalElement::beamsplitter(
            "loop",
            ["x", "y"],
            ["y", "x2"],
        ));
        cfg.elements.push(OpticalElement::mirror("back", "x2", "x"));
        cfg.vacuum.clear();
        // x2 -> x -> loop -> y -> loop: y is consumed and produced by `loop`.
        let err = build_path_graph(cfg).unwrap_err();
        assert!(
            matches!(err, OpticsError::Cycle(ref id) if id == "loop" || id == "back"),
            "{err:?}"
        );
    }

    #[test]
    fn rejects_dangling_output() {
        let mut cfg = GraphPreset::Kim1999.config();
        cfg.detectors.remove("D2");
        let err = build_path_graph(cfg).unwrap_err();
        assert_eq!(
            err,
            OpticsError::DanglingPort {
                element: "seg_d2".into(),
                port: "d2".into()
            }
        );
    }

    #[test]
    fn rejects_undeclared_vacuum() {
        let mut cfg = GraphPreset::Kim1999.config();
        cfg.vacuum.retain(|p| p != "vac_b");
        let err = build_path_graph(cfg).unwrap_err();
        assert_eq!(
            err,
            OpticsError::DanglingPort {
                element: "BSB".into(),
                port: "vac_b".into()
            }
        );
    }

    #[test]
    fn rejects_unreachable_detector() {
        let mut cfg = GraphPreset::Straightline { length_m: 1.0 }.config();
        cfg.detectors.insert("Dx".into(), "nowhere".into());
        assert_eq!(
            build_path_graph(cfg).unwrap_err(),
            OpticsError::DetectorUnreachable("Dx".into())
        );

        // Fed only by vacuum.
        let mut cfg = GraphPreset::Straightline { length_m: 1.0 }.config();
        cfg.vacuum.push("v".into());
        cfg.elements.push(OpticalElement::mirror("M", "v", "vout"));
        cfg.detectors.insert("Dv".into(), "vout".into());
        assert_eq!(
            build_path_graph(cfg).unwrap_err(),
            OpticsError::DetectorUnreachable("Dv".into())
        );
    }

    #[test]
    fn rejects_bad_element_shapes() {
        let mut cfg = GraphPreset::Straightline { length_m: 1.0 }.config();
        cfg.elements[0].outputs.push("extra".into());
        assert!(matches!(
            build_path_graph(cfg).unwrap_err(),
            OpticsError::PortCount { ref element, .. } if element == "seg_a"
        ));

        let mut cfg = GraphPreset::Straightline { length_m: 1.0 }.config();
        cfg.elements[1].length_m = -1.0;
        assert!(matches!(
            build_path_graph(cfg).unwrap_err(),
            OpticsError::InvalidLength { ref element, .. } if element == "seg_b"
        ));

        let mut cfg = GraphPreset::Straightline { length_m: 1.0 }.config();
        cfg.wavelength_m = 0.0;
        assert!(matches!(
            build_path_graph(cfg).unwrap_err(),
            OpticsError::InvalidWavelength(_)
        ));
    }
}

//! Structural validation of scenario files, reporting every violation.

use toml::Value;

use crate::optics::GraphPreset;

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    lo_incl: bool,
    hi: f64,
    hi_incl: bool,
}

const ANY: Range = Range {
    lo: f64::NEG_INFINITY,
    lo_incl: true,
    hi: f64::INFINITY,
    hi_incl: true,
};
const POSITIVE: Range = Range {
    lo: 0.0,
    lo_incl: false,
    ..ANY
};
const NON_NEGATIVE: Range = Range { lo: 0.0, ..ANY };
const UNIT: Range = Range {
    lo: 0.0,
    hi: 1.0,
    ..ANY
};
const SIGNED_UNIT: Range = Range {
    lo: -1.0,
    hi: 1.0,
    ..ANY
};
const OPEN_UNIT: Range = Range {
    lo: 0.0,
    lo_incl: false,
    hi: 1.0,
    hi_incl: false,
};
const POSITIVE_UNIT: Range = Range {
    lo: 0.0,
    lo_incl: false,
    hi: 1.0,
    hi_incl: true,
};

impl Range {
    fn check(&self, v: f64) -> Result<(), String> {
        let lo_ok = if self.lo_incl {
            v >= self.lo
        } else {
            v > self.lo
        };
        let hi_ok = if self.hi_incl {
            v <= self.hi
        } else {
            v < self.hi
        };
        if v.is_finite() && lo_ok && hi_ok {
            return Ok(());
        }
        let lo = if self.lo.is_finite() {
            format!("{}{}", if self.lo_incl { ">= " } else { "> " }, self.lo)
        } else {
            String::new()
        };
        let hi = if self.hi.is_finite() {
            format!("{}{}", if self.hi_incl { "<= " } else { "< " }, self.hi)
        } else {
            String::new()
        };
        let bounds = match (lo.is_empty(), hi.is_empty()) {
            (false, false) => format!("{lo} and {hi}"),
            (false, true) => lo,
            (true, false) => hi,
            (true, true) => "finite".into(),
        };
        Err(format!("out of range: must be {bounds}, got {v}"))
    }
}

#[derive(Clone, Copy)]
enum Ty {
    Int(i64),
    Float(Range),
    Str,
    Bits,
    Enum(&'static [&'static str], &'static str),
    FloatList(Range),
    StrList,
    Point3,
    Point3Map,
    StrMap,
    Marking,
    Section(&'static [Field]),
    TableArray(&'static [Field]),
}

#[derive(Clone, Copy)]
struct Field {
    key: &'static str,
    ty: Ty,
    required: bool,
}

const fn req(key: &'static str, ty: Ty) -> Field {
    Field {
        key,
        ty,
        required: true,
    }
}

const fn opt(key: &'static str, ty: Ty) -> Field {
    Field {
        key,
        ty,
        required: false,
    }
}

const MODEL_KINDS: &[&str] = &[
    "QM_BASELINE",
    "FUTURE_HS",
    "PRESENT_HS",
    "PAST_HS",
    "HYPERWAVE",
];
const SETTINGS: &[&str] = &["ERASE", "MARK"];
const ELEMENT_KINDS: &[&str] = &["beamsplitter_5050", "mirror", "phase_segment"];

const ELEMENT: &[Field] = &[
    req("id", Ty::Str),
    req("kind", Ty::Enum(ELEMENT_KINDS, "element kind")),
    req("inputs", Ty::StrList),
    req("outputs", Ty::StrList),
    opt("length_m", Ty::Float(NON_NEGATIVE)),
];

const GRAPH: &[Field] = &[
    opt("preset", Ty::Enum(&GraphPreset::NAMES, "graph preset")),
    opt("length_m", Ty::Float(POSITIVE)),
    opt("wavelength_m", Ty::Float(POSITIVE)),
    opt("source_a", Ty::Str),
    opt("source_b", Ty::Str),
    opt("elements", Ty::TableArray(ELEMENT)),
    opt("detectors", Ty::StrMap),
    opt("vacuum", Ty::StrList),
];

const SIGNAL: &[Field] = &[
    opt("wavelength_m", Ty::Float(POSITIVE)),
    opt("slit_separation_m", Ty::Float(POSITIVE)),
    opt("screen_distance_m", Ty::Float(POSITIVE)),
    opt("envelope_sigma_m", Ty::Float(POSITIVE)),
    opt("envelope_center_a_m", Ty::Float(ANY)),
    opt("envelope_center_b_m", Ty::Float(ANY)),
    opt("source_phase_rad", Ty::Float(ANY)),
];

const GEOMETRY: &[Field] = &[
    req("signal_path_m", Ty::Float(NON_NEGATIVE)),
    req("d0_position_m", Ty::Point3),
    opt("detector_positions_m", Ty::Point3Map),
    opt("remote_distance_m", Ty::Float(NON_NEGATIVE)),
];

const EMISSION: &[Field] = &[
    opt("interval_s", Ty::Float(POSITIVE)),
    opt("rate_hz", Ty::Float(POSITIVE)),
    opt("interval_cycle_s", Ty::FloatList(POSITIVE)),
    opt("times_s", Ty::FloatList(ANY)),
];

const MODEL: &[Field] = &[
    req("kind", Ty::Enum(MODEL_KINDS, "model kind")),
    opt("kappa", Ty::Float(SIGNED_UNIT)),
    opt("conjectured_visibility", Ty::Float(UNIT)),
    opt("tau_c_s", Ty::Float(POSITIVE)),
    opt("jitter_sigma_s", Ty::Float(NON_NEGATIVE)),
    opt("p_mark", Ty::Marking),
    opt("fringe_phase_rad", Ty::Float(ANY)),
    opt("signal_speed_ratio", Ty::Float(POSITIVE)),
    opt("idler_speed_ratio", Ty::Float(POSITIVE)),
];

const CHANGE: &[Field] = &[
    req("t_send_s", Ty::Float(ANY)),
    req("setting", Ty::Enum(SETTINGS, "setting")),
];

const SCHEDULE: &[Field] = &[
    opt("changes", Ty::TableArray(CHANGE)),
    opt("message", Ty::Bits),
    opt("symbol_period_s", Ty::Float(POSITIVE)),
    opt("start_s", Ty::Float(ANY)),
];

const ANALYSIS: &[Field] = &[
    opt("bins", Ty::Int(16)),
    opt("coincidence_window_ns", Ty::Float(NON_NEGATIVE)),
    opt("lightlike_epsilon_ns", Ty::Float(NON_NEGATIVE)),
    opt("onset_window_emissions", Ty::Int(500)),
    opt("cusum_k", Ty::Float(NON_NEGATIVE)),
    opt("cusum_h", Ty::Float(POSITIVE)),
    opt("past_kappa_prime", Ty::Float(POSITIVE)),
    opt("mi_bins", Ty::Int(2)),
    opt("bootstrap_resamples", Ty::Int(0)),
    opt("alpha", Ty::Float(OPEN_UNIT)),
    opt("peak_min_separation_m", Ty::Float(NON_NEGATIVE)),
    opt("scan_positions", Ty::Int(0)),
    opt("tau_bins_s", Ty::FloatList(POSITIVE)),
    opt("reference_visibility", Ty::Float(POSITIVE_UNIT)),
    opt("decode_threshold", Ty::Float(UNIT)),
];

const ROOT: &[Field] = &[
    opt("name", Ty::Str),
    req("seed", Ty::Int(0)),
    req("n_emissions", Ty::Int(1)),
    req("graph", Ty::Section(GRAPH)),
    opt("mark_graph", Ty::Section(GRAPH)),
    opt("signal", Ty::Section(SIGNAL)),
    req("geometry", Ty::Section(GEOMETRY)),
    req("emission", Ty::Section(EMISSION)),
    req("model", Ty::Section(MODEL)),
    opt("schedule", Ty::Section(SCHEDULE)),
    opt("analysis", Ty::Section(ANALYSIS)),
];

const UNIT_SUFFIXES: &[&str] = &["_m", "_s", "_ns", "_hz", "_rad"];

fn strip_unit(key: &str) -> &str {
    UNIT_SUFFIXES
        .iter()
        .find_map(|s| key.strip_suffix(s))
        .unwrap_or(key)
}

/// Known keys that carry a unit suffix and whose stem ends with `key`.
fn suffix_candidates(key: &str, fields: &[Field], prefix: &str, out: &mut Vec<String>) {
    for f in fields {
        let stem = strip_unit(f.key);
        if stem != f.key && (stem == key || stem.ends_with(&format!("_{key}"))) {
            out.push(format!("{prefix}{}", f.key));
        }
        if let Ty::Section(sub) = f.ty {
            suffix_candidates(key, sub, &format!("{prefix}{}.", f.key), out);
        }
    }
}

fn unknown_key_message(path: &str, key: &str, fields: &[Field]) -> String {
    let mut local = Vec::new();
    suffix_candidates(key, fields, "", &mut local);
    if local.is_empty() {
        suffix_candidates(key, ROOT, "", &mut local);
    }
    match local.len() {
        0 => {}
        1 => {
            return format!(
                "{path}: unknown key `{key}` has no unit suffix; expected `{}`",
                local[0]
            )
        }
        _ => {
            let list: Vec<String> = local.iter().map(|c| format!("`{c}`")).collect();
            return format!(
                "{path}: unknown key `{key}` has no unit suffix; expected one of {}",
                list.join(", ")
            );
        }
    }
    format!("{path}: unknown key `{key}`")
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn check_value(path: &str, v: &Value, ty: Ty, errors: &mut Vec<String>) {
    let mut err = |m: String| errors.push(format!("{path}: {m}"));
    match ty {
        Ty::Int(min) => match v {
            Value::Integer(i) if *i >= min => {}
            Value::Integer(i) => err(format!("out of range: must be >= {min}, got {i}")),
            other => err(format!("expected an integer, got {}", other.type_str())),
        },
        Ty::Float(r) => match as_float(v) {
            Some(f) => {
                if let Err(m) = r.check(f) {
                    err(m)
                }
            }
            None => err(format!("expected a number, got {}", v.type_str())),
        },
        Ty::Str => {
            if !v.is_str() {
                err(format!("expected a string, got {}", v.type_str()))
            }
        }
        Ty::Bits => match v.as_str() {
            Some(s) if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') => {}
            _ => err("expected a non-empty string of 0s and 1s".into()),
        },
        Ty::Enum(options, what) => match v.as_str() {
            Some(s) if options.contains(&s) => {}
            Some(s) => err(format!(
                "unknown {what} `{s}`; expected one of {}",
                options.join(", ")
            )),
            None => err(format!("expected a string, got {}", v.type_str())),
        },
        Ty::FloatList(r) => match v.as_array() {
            Some(a) => {
                for (i, x) in a.iter().enumerate() {
                    check_value(&format!("{path}[{i}]"), x, Ty::Float(r), errors);
                }
            }
            None => err(format!(
                "expected an array of numbers, got {}",
                v.type_str()
            )),
        },
        Ty::StrList => match v.as_array() {
            Some(a) if a.iter().all(Value::is_str) => {}
            _ => err("expected an array of strings".into()),
        },
        Ty::Point3 => match v.as_array() {
            Some(a)
                if a.len() == 3 && a.iter().all(|x| as_float(x).is_some_and(f64::is_finite)) => {}
            _ => err("expected [x, y, z] in metres".into()),
        },
        Ty::Point3Map => match v.as_table() {
            Some(t) => {
                for (k, p) in t {
                    check_value(&join(path, k), p, Ty::Point3, errors);
                }
            }
            None => err("expected a table of detector positions".into()),
        },
        Ty::StrMap => match v.as_table() {
            Some(t) if t.values().all(Value::is_str) => {}
            _ => err("expected a table of strings".into()),
        },
        Ty::Marking => match v {
            Value::Array(points) => {
                if points.is_empty() {
                    err("marking curve is empty".into());
                }
                for (i, p) in points.iter().enumerate() {
                    let pair = p.as_array().filter(|a| a.len() == 2);
                    match pair.and_then(|a| Some((as_float(&a[0])?, as_float(&a[1])?))) {
                        Some((_, prob)) => {
                            if let Err(m) = UNIT.check(prob) {
                                errors.push(format!("{path}[{i}]: {m}"));
                            }
                        }
                        None => errors.push(format!("{path}[{i}]: expected [t_s, p]")),
                    }
                }
            }
            other => check_value(path, other, Ty::Float(UNIT), errors),
        },
        Ty::Section(fields) => match v.as_table() {
            Some(t) => check_table(path, t, fields, errors),
            None => err(format!("expected a table, got {}", v.type_str())),
        },
        Ty::TableArray(fields) => match v.as_array() {
            Some(a) => {
                for (i, item) in a.iter().enumerate() {
                    let p = format!("{path}[{i}]");
                    match item.as_table() {
                        Some(t) => check_table(&p, t, fields, errors),
                        None => errors.push(format!("{p}: expected a table")),
                    }
                }
            }
            None => err("expected an array of tables".into()),
        },
    }
}

fn check_table(path: &str, t: &toml::Table, fields: &[Field], errors: &mut Vec<String>) {
    for f in fields {
        match t.get(f.key) {
            Some(v) => check_value(&join(path, f.key), v, f.ty, errors),
            None if f.required => {
                errors.push(format!("{}: missing required key", join(path, f.key)))
            }
            None => {}
        }
    }
    for k in t.keys() {
        if !fields.iter().any(|f| f.key == k) {
            let here = if path.is_empty() { "<root>" } else { path };
            errors.push(unknown_key_message(here, k, fields));
        }
    }
}

fn cross_checks(root: &toml::Table, errors: &mut Vec<String>) {
    for g in ["graph", "mark_graph"] {
        let Some(t) = root.get(g).and_then(Value::as_table) else {
            continue;
        };
        let inline = [
            "wavelength_m",
            "source_a",
            "source_b",
            "elements",
            "detectors",
            "vacuum",
        ];
        let has_inline = inline.iter().any(|k| t.contains_key(*k));
        if t.contains_key("preset") {
            if has_inline {
                errors.push(format!(
                    "{g}: give either `preset` or an inline graph, not both"
                ));
            }
        } else {
            if t.contains_key("length_m") {
                errors.push(format!("{g}.length_m: only valid with `preset`"));
            }
            for k in ["wavelength_m", "source_a", "source_b", "detectors"] {
                if !t.contains_key(k) {
                    errors.push(format!(
                        "{g}.{k}: missing required key (inline graph without `preset`)"
                    ));
                }
            }
        }
    }
    if let Some(t) = root.get("emission").and_then(Value::as_table) {
        let n = EMISSION.iter().filter(|f| t.contains_key(f.key)).count();
        if n != 1 {
            errors.push(format!(
                "emission: exactly one of interval_s, rate_hz, interval_cycle_s, times_s is required (found {n})"
            ));
        }
    }
    if let Some(t) = root.get("schedule").and_then(Value::as_table) {
        if t.contains_key("changes") && t.contains_key("message") {
            errors.push("schedule: give either `changes` or `message`, not both".into());
        }
        if t.contains_key("message") && !t.contains_key("symbol_period_s") {
            errors.push(
                "schedule.symbol_period_s: missing required key (needed by `message`)".into(),
            );
        }
        if !t.contains_key("message") {
            for k in ["symbol_period_s", "start_s"] {
                if t.contains_key(k) {
                    errors.push(format!("schedule.{k}: only valid with `message`"));
                }
            }
        }
    }
}

/// All structural violations of a parsed scenario document.
pub fn validate(root: &toml::Table) -> Vec<String> {
    let mut errors = Vec::new();
    check_table("", root, ROOT, &mut errors);
    cross_checks(root, &mut errors);
    errors
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dcqe_core::config::{preset_source, ScenarioConfig};

fn dcqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcqe"))
        .args(args)
        .env_remove("DCQE_PRESET_DIR")
        .output()
        .expect("dcqe runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn presets_list_and_dump() {
    let o = dcqe(&["presets", "list"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    for n in ["kim1999_full", "remote_trigger", "solar_burst_scan", "straightline_remote", "mirror_signal"] {
        assert!(names.iter().any(|m| m == n), "{n} not listed");
    }
    let o = dcqe(&["presets", "dump", "remote_trigger"]);
    assert_eq!(code(&o), 0);
    let cfg = ScenarioConfig::from_toml_str(&stdout(&o)).unwrap();
    assert_eq!(cfg.model.kind.as_str(), "FUTURE_HS");
    assert!((cfg.geometry.remote_distance_m - 5.0 * 299_792_458.0).abs() < 1e-6);

    let o = dcqe(&["presets", "dump", "no_such_preset"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("kim1999_full"));
}

#[test]
fn preset_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let src = preset_source("straightline_remote").unwrap().replace("seed = 42", "seed = 5");
    fs::write(dir.path().join("my_lab.toml"), src).unwrap();
    let out = dir.path().join("s.dcqe");
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_dcqe"))
            .args(args)
            .env("DCQE_PRESET_DIR", dir.path())
            .output()
            .unwrap()
    };
    assert!(stdout(&run(&["presets", "list"])).lines().any(|l| l == "my_lab"));
    let o = run(&["simulate", "-c", "my_lab", "--n", "10", "-o", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(&out).unwrap().starts_with("#dcqe-events v1 seed=5 n_emissions=10 events=20 "));
}

#[test]
fn simulate_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.dcqe"), dir.path().join("b.dcqe"));
    for out in [&a, &b] {
        let o = dcqe(&["simulate", "-c", "kim1999_full", "--n", "2000", "--seed", "9", "-o", p(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("events     4000"));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 3 + 4000);
    assert!(text.starts_with("#dcqe-events v1 seed=9 n_emissions=2000 events=4000 scenario="));
}

#[test]
fn straightline_idlers_hit_the_remote_screen_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.dcqe");
    assert_eq!(code(&dcqe(&["simulate", "-c", "straightline_remote", "--n", "500", "-o", p(&out)])), 0);
    let text = fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(3) {
        let det = line.split(',').nth(1).unwrap();
        assert!(["D0", "R0_A", "R0_B"].contains(&det), "{det}");
    }
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let base = preset_source("remote_trigger").unwrap();
    let cases = [
        (
            base.replace("remote_distance_m = 1498962290.0", "distance = 5"),
            vec!["distance", "remote_distance_m"],
        ),
        (base.replace("kind = \"FUTURE_HS\"", "kind = \"FUTURE_HS\"\np_mark = 1.5"), vec!["p_mark"]),
        (base.replace("FUTURE_HS", "WORMHOLE"), vec!["unknown model kind"]),
    ];
    for (i, (src, needles)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.toml"));
        fs::write(&path, src).unwrap();
        let o = dcqe(&["simulate", "-c", p(&path), "-o", p(&dir.path().join("x"))]);
        assert_eq!(code(&o), 2, "case {i}");
        for n in needles {
            assert!(stderr(&o).contains(n), "case {i}: `{n}` missing from {}", stderr(&o));
        }
    }
}

#[test]
fn every_violation_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "seed = -1\nn_emissions = \"many\"\n").unwrap();
    let o = dcqe(&["audit", "-c", p(&path)]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    for key in ["seed", "n_emissions", "graph", "geometry", "emission", "model"] {
        assert!(err.contains(key), "{key} missing from {err}");
    }
}

#[test]
fn io_failures_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcqe(&["analyze", p(&dir.path().join("missing.dcqe")), "-o", p(dir.path())]);
    assert_eq!(code(&o), 4);

    let stream = dir.path().join("s.dcqe");
    assert_eq!(code(&dcqe(&["simulate", "-c", "kim1999_full", "--n", "100", "-o", p(&stream)])), 0);
    let text = fs::read_to_string(&stream).unwrap();
    let cut: String = text.lines().take(120).map(|l| format!("{l}\n")).collect();
    fs::write(&stream, cut).unwrap();
    let o = dcqe(&["analyze", p(&stream), "-o", p(&dir.path().join("r"))]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("truncated"), "{}", stderr(&o));
}

#[test]
fn audit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit.json");
    let o = dcqe(&["audit", "-c", "kim1999_full", "-o", p(&out)]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("verdict paradox_topology"));
    assert_eq!(json(&out)["verdict"], "paradox_topology");

    let o = dcqe(&["audit", "-c", "straightline_remote"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict on_cone"));

    let o = dcqe(&["audit", "-c", "mirror_signal"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict outside_cone"));
}

#[test]
fn analyze_checks_the_scenario_hash() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.dcqe");
    assert_eq!(code(&dcqe(&["simulate", "-c", "kim1999_full", "--n", "3000", "-o", p(&stream)])), 0);
    let out = p(&dir.path().join("r")).to_string();

    let o = dcqe(&["analyze", p(&stream), "-c", "kim1999_full", "-o", &out]);
    assert_eq!(code(&o), 2, "config differs in n_emissions");
    assert!(stderr(&o).contains("--force-hash-mismatch"));
    let o = dcqe(&["analyze", p(&stream), "-c", "kim1999_full", "-o", &out, "--force-hash-mismatch"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));

    let exact = dir.path().join("exact.toml");
    let mut cfg = ScenarioConfig::from_toml_str(&preset_source("kim1999_full").unwrap()).unwrap();
    cfg.n_emissions = 3000;
    fs::write(&exact, cfg.to_toml_string()).unwrap();
    let o = dcqe(&["analyze", p(&stream), "-c", p(&exact), "-o", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn stream_alone_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = dcqe(&["report", "-c", "kim1999_full", "--n", "20000", "-o", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = dcqe(&["analyze", p(&a.join("events.dcqe")), "-o", p(&b)]);
    assert_eq!(code(&o), 0);
    let mut compared = 0;
    for entry in fs::read_dir(&b).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
        compared += 1;
    }
    assert!(compared >= 12);
}

#[test]
fn kim1999_report_contents() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcqe(&["report", "-c", "kim1999_full", "-o", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for d in ["D1", "D2", "D3", "D4"] {
        let svg = fs::read_to_string(dir.path().join(format!("fringe_D0x{d}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<desc>"));
    }
    let r = json(&dir.path().join("report.json"));
    let dphi = r["phase_difference"]["radians"].as_f64().unwrap();
    assert!((dphi - std::f64::consts::PI).abs() < 0.05, "{dphi}");
    assert!(r["settings_test"]["mi"]["ci_high"].as_f64().unwrap() <= 1e-3);
    assert_eq!(r["audit"]["verdict"], "paradox_topology");
    assert!(fs::read_to_string(dir.path().join("report.txt")).unwrap().contains("[audit] verdict paradox_topology"));
}

#[test]
fn remote_trigger_onset_marker() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcqe(&["report", "-c", "remote_trigger", "-o", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["onset"]["model_verdict"], "FUTURE_HS");
    let t = r["onset"]["t_hat"].as_f64().unwrap();
    let ci = r["onset"]["ci"].as_f64().unwrap();
    assert!((t - 10.0).abs() <= ci, "{t} +/- {ci}");
    let svg = fs::read_to_string(dir.path().join("visibility_series.svg")).unwrap();
    assert!(svg.contains("# marker: onset at"));
}

#[test]
fn solar_burst_scan_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = dcqe(&["report", "-c", "solar_burst_scan", "-o", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("marking_scan.csv")).unwrap();
    let p_hat: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(p_hat.len(), 10);
    assert!(p_hat[..5].iter().all(|&v| (v - 0.1).abs() < 0.06), "{p_hat:?}");
    assert!(p_hat[5..].iter().all(|&v| (v - 0.9).abs() < 0.06), "{p_hat:?}");
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["marking"]["step_index"], 5);
    assert!(fs::read_to_string(dir.path().join("marking_scan.svg")).unwrap().contains("# marker: step"));
}

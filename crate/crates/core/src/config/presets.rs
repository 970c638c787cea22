use std::path::PathBuf;

use super::ConfigError;

/// Directory searched for `<name>.toml` before the built-in presets.
pub const PRESET_DIR_ENV: &str = "DCQE_PRESET_DIR";

const BUILTIN: &[(&str, &str)] = &[
    (
        "hyperwave_tau",
        include_str!("../../presets/hyperwave_tau.toml"),
    ),
    (
        "kim1999_full",
        include_str!("../../presets/kim1999_full.toml"),
    ),
    (
        "message_link",
        include_str!("../../presets/message_link.toml"),
    ),
    (
        "mirror_signal",
        include_str!("../../presets/mirror_signal.toml"),
    ),
    (
        "remote_trigger",
        include_str!("../../presets/remote_trigger.toml"),
    ),
    (
        "solar_burst_scan",
        include_str!("../../presets/solar_burst_scan.toml"),
    ),
    (
        "straightline_remote",
        include_str!("../../presets/straightline_remote.toml"),
    ),
];

fn preset_dir() -> Option<PathBuf> {
    std::env::var_os(PRESET_DIR_ENV).map(PathBuf::from)
}

/// Built-in preset names plus any `*.toml` in the preset directory, sorted.
pub fn preset_names() -> Vec<String> {
    let mut names: Vec<String> = BUILTIN.iter().map(|(n, _)| n.to_string()).collect();
    if let Some(dir) = preset_dir() {
        if let Ok(entries) = std::fs::read_dir(dir) {
            for e in entries.flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "toml") {
                    if let Some(stem) = p.file_stem().and_then(|s| s.to_str()) {
                        names.push(stem.to_string());
                    }
                }
            }
        }
    }
    names.sort();
    names.dedup();
    names
}

/// TOML text of a preset; the preset directory shadows built-ins.
pub fn preset_source(name: &str) -> Result<String, ConfigError> {
    if let Some(dir) = preset_dir() {
        let p = dir.join(format!("{name}.toml"));
        if p.is_file() {
            return std::fs::read_to_string(&p).map_err(|e| ConfigError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            });
        }
    }
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s.to_string())
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

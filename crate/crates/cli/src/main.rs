//! `dcqe`: simulate event streams, analyse them, and audit scenario geometry.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dcqe_core::config::{preset_names, preset_source, resolve_config, ConfigError, ScenarioConfig, PRESET_DIR_ENV};
use dcqe_core::report::{analyze, write_report, AnalysisReport};
use dcqe_core::scenarios::DetectionEvent;
use dcqe_core::spacetime::{audit_topology, AuditVerdict, CausalAuditReport};
use dcqe_core::stream::{read_stream_file, write_stream_file, StreamError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_PARADOX: u8 = 3;
const EXIT_IO: u8 = 4;

/// Stream file name used by `report`.
const REPORT_STREAM: &str = "events.dcqe";

#[derive(Parser)]
#[command(name = "dcqe", version, about = "Delayed-choice quantum eraser simulator and analysis harness")]
#[command(after_help = "Scenario arguments accept a TOML file path or a preset name. \
Presets are looked up in $DCQE_PRESET_DIR first, then among the built-ins.\n\n\
Exit codes: 0 ok, 2 validation failure, 3 audit found a paradox topology, 4 I/O failure.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file or preset name.
    #[arg(long, short)]
    config: String,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of emissions.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its event stream.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Output stream file.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Analyse an event stream and write the report directory.
    Analyze {
        /// Event stream file.
        stream: PathBuf,
        /// Scenario to analyse against; defaults to the config embedded in the stream.
        #[arg(long, short)]
        config: Option<String>,
        /// Report directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Proceed when the stream was produced by a different scenario.
        #[arg(long)]
        force_hash_mismatch: bool,
    },
    /// Classify idler detections against the D0 light cone.
    Audit {
        /// Scenario file or preset name.
        #[arg(long, short)]
        config: String,
        /// Also write the audit as JSON.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Simulate and analyse in one step.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Report directory; the stream is written there as `events.dcqe`.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// List or print scenario presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Names of all available presets.
    List,
    /// Print a preset's TOML source.
    Dump {
        name: String,
        /// Write to a file instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::io(e.to_string()),
            _ => Failure::validation(e.to_string()),
        }
    }
}

impl From<StreamError> for Failure {
    fn from(e: StreamError) -> Self {
        match e {
            StreamError::Config(c) => c.into(),
            other => Failure::io(other.to_string()),
        }
    }
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::io(format!("{}: {e}", path.display()))
}

fn load(run: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = resolve_config(&run.config)?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(n) = run.n {
        cfg.n_emissions = n;
    }
    if run.seed.is_some() || run.n.is_some() {
        cfg.validate()?;
    }
    Ok(cfg)
}

fn simulation_summary(cfg: &ScenarioConfig, events: &[DetectionEvent]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in events {
        *counts.entry(e.detector.as_str()).or_default() += 1;
    }
    let duration = match (events.first(), events.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    let mut s = String::new();
    let _ = writeln!(s, "scenario   {}", cfg.name.as_deref().unwrap_or("(unnamed)"));
    let _ = writeln!(s, "hash       {}", cfg.hash());
    let _ = writeln!(s, "seed       {}", cfg.seed);
    let _ = writeln!(s, "emissions  {}", cfg.n_emissions);
    let _ = writeln!(s, "events     {}", events.len());
    let _ = writeln!(s, "duration   {duration:.6e} s");
    for (d, n) in counts {
        let _ = writeln!(s, "  {d:<8} {n}");
    }
    s
}

fn simulate_to(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<DetectionEvent>, Failure> {
    let events = cfg.simulate()?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_failure(parent))?;
    }
    write_stream_file(out, cfg, &events)?;
    print!("{}", simulation_summary(cfg, &events));
    println!("wrote {}", out.display());
    Ok(events)
}

fn emit_report(cfg: &ScenarioConfig, events: &[DetectionEvent], out: &Path) -> Result<AnalysisReport, Failure> {
    let report = analyze(cfg, events)?;
    let files = write_report(out, &report).map_err(io_failure(out))?;
    print!("{}", report.to_text());
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(report)
}

fn audit_text(r: &CausalAuditReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "reference {} at t = {:.6e} s, x = {:?} m",
        r.reference.label, r.reference.t, r.reference.pos
    );
    for e in &r.entries {
        let _ = writeln!(
            s,
            "  {:<8} t = {:.6e} s  {:<16} ds2 = {:+.6e} s^2",
            e.event.label,
            e.event.t,
            format!("{:?}", e.class.kind),
            e.class.squared_interval
        );
    }
    let _ = writeln!(s, "verdict {}", r.verdict.as_str());
    s
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate { run, out } => {
            let cfg = load(&run)?;
            simulate_to(&cfg, &out)?;
        }
        Command::Analyze {
            stream,
            config,
            out,
            force_hash_mismatch,
        } => {
            let (header, events) = read_stream_file(&stream)?;
            let cfg = match config {
                None => header.config,
                Some(arg) => {
                    let cfg = resolve_config(&arg)?;
                    if cfg.hash() != header.scenario_hash {
                        let msg = format!(
                            "stream was produced by scenario {} but `{arg}` hashes to {}",
                            header.scenario_hash,
                            cfg.hash()
                        );
                        if !force_hash_mismatch {
                            return Err(Failure::validation(format!("{msg} (pass --force-hash-mismatch to proceed)")));
                        }
                        eprintln!("warning: {msg}");
                    }
                    cfg
                }
            };
            emit_report(&cfg, &events, &out)?;
        }
        Command::Audit { config, out } => {
            let cfg = resolve_config(&config)?;
            let built = cfg.build()?;
            let eps = cfg.analysis.lightlike_epsilon_ns * 1e-9;
            let report = audit_topology(&built.scenario, eps).map_err(|e| Failure::validation(e.to_string()))?;
            print!("{}", audit_text(&report));
            if let Some(path) = out {
                let json = serde_json::to_string_pretty(&report).expect("audit reports serialize") + "\n";
                std::fs::write(&path, json).map_err(io_failure(&path))?;
            }
            if report.verdict == AuditVerdict::ParadoxTopology {
                return Ok(EXIT_PARADOX);
            }
        }
        Command::Report { run, out } => {
            let cfg = load(&run)?;
            std::fs::create_dir_all(&out).map_err(io_failure(&out))?;
            let stream = out.join(REPORT_STREAM);
            simulate_to(&cfg, &stream)?;
            // Analyse what was stored so the report matches a later `analyze`.
            let (header, events) = read_stream_file(&stream)?;
            emit_report(&header.config, &events, &out)?;
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in preset_names() {
                    println!("{name}");
                }
            }
            PresetAction::Dump { name, out } => {
                let src = preset_source(&name).map_err(|e| match e {
                    ConfigError::UnknownPreset(_) => Failure::validation(format!(
                        "{e} (available: {}; set {PRESET_DIR_ENV} to add more)",
                        preset_names().join(", ")
                    )),
                    other => other.into(),
                })?;
                match out {
                    Some(path) => std::fs::write(&path, src).map_err(io_failure(&path))?,
                    None => print!("{src}"),
                }
            }
        },
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

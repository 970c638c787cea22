//! Line-oriented event-stream files.
//!
//! ```text
//! #dcqe-events v1 seed=42 n_emissions=3 events=6 scenario=<sha256>
//! #config {"analysis":{...},...}
//! emission_index,detector,t_s,x_m,setting_in_effect
//! 0,D0,3.33564095198152e-9,-1.23450000000000e-4,ERASE
//! 0,D3,4.33633323757597e-9,,ERASE
//! ```
//!
//! Times and positions carry 15 significant digits. Rows are sorted by time.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::scenarios::{DetectionEvent, Setting};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "#dcqe-events";
const COLUMNS: &str = "emission_index,detector,t_s,x_m,setting_in_effect";

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("stream truncated: header declares {expected} events, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("embedded config does not hash to the header's scenario hash")]
    CorruptConfig,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub version: u32,
    pub seed: u64,
    pub n_emissions: u64,
    pub events: u64,
    pub scenario_hash: String,
    pub config: ScenarioConfig,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.14e}")
}

/// Writes header and rows; `events` must already be in stream order.
pub fn write_events<W: Write>(
    w: &mut W,
    cfg: &ScenarioConfig,
    events: &[DetectionEvent],
) -> io::Result<()> {
    writeln!(
        w,
        "{MAGIC} v{FORMAT_VERSION} seed={} n_emissions={} events={} scenario={}",
        cfg.seed,
        cfg.n_emissions,
        events.len(),
        cfg.hash()
    )?;
    writeln!(w, "#config {}", cfg.canonical_json())?;
    writeln!(w, "{COLUMNS}")?;
    for e in events {
        let x = e.x.map(fmt_f64).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            e.emission_index,
            e.detector,
            fmt_f64(e.t),
            x,
            e.setting.as_str()
        )?;
    }
    Ok(())
}

pub fn write_stream_file(
    path: &Path,
    cfg: &ScenarioConfig,
    events: &[DetectionEvent],
) -> Result<(), StreamError> {
    let io_err = |source| StreamError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    write_events(&mut w, cfg, events).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn parse_header(line: &str) -> Result<(u32, u64, u64, u64, String), String> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(format!("not an event stream (expected `{MAGIC}`)"));
    }
    let version = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or("missing format version")?;
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let (mut seed, mut n, mut events, mut hash) = (None, None, None, None);
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{kv}`"))?;
        let num = || {
            v.parse::<u64>()
                .map_err(|_| format!("header field `{k}` is not an integer"))
        };
        match k {
            "seed" => seed = Some(num()?),
            "n_emissions" => n = Some(num()?),
            "events" => events = Some(num()?),
            "scenario" => hash = Some(v.to_string()),
            _ => return Err(format!("unknown header field `{k}`")),
        }
    }
    Ok((
        version,
        seed.ok_or("header lacks seed")?,
        n.ok_or("header lacks n_emissions")?,
        events.ok_or("header lacks events")?,
        hash.ok_or("header lacks scenario")?,
    ))
}

fn parse_row(line: &str) -> Result<DetectionEvent, String> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 5 {
        return Err(format!("expected 5 fields, found {}", f.len()));
    }
    let emission_index = f[0]
        .parse()
        .map_err(|_| format!("bad emission index `{}`", f[0]))?;
    if f[1].is_empty() {
        return Err("empty detector id".into());
    }
    let t: f64 = f[2].parse().map_err(|_| format!("bad time `{}`", f[2]))?;
    let x = if f[3].is_empty() {
        None
    } else {
        Some(
            f[3].parse::<f64>()
                .map_err(|_| format!("bad position `{}`", f[3]))?,
        )
    };
    let setting = Setting::parse(f[4]).ok_or_else(|| format!("bad setting `{}`", f[4]))?;
    Ok(DetectionEvent {
        emission_index,
        detector: f[1].to_string(),
        t,
        x,
        setting,
    })
}

/// Parses a stream, checking the embedded config against the header hash,
/// row order, and the declared event count.
pub fn read_events<R: BufRead>(r: R) -> Result<(StreamHeader, Vec<DetectionEvent>), StreamError> {
    let mut lines = r.lines();
    let mut next = |n: usize| -> Result<Option<String>, StreamError> {
        lines.next().transpose().map_err(|e| StreamError::Format {
            line: n,
            message: e.to_string(),
        })
    };
    let fmt = |line: usize, message: String| StreamError::Format { line, message };

    let head = next(1)?.ok_or_else(|| fmt(1, "empty file".into()))?;
    let (version, seed, n_emissions, declared, scenario_hash) =
        parse_header(&head).map_err(|m| fmt(1, m))?;
    let cfg_line = next(2)?.ok_or(StreamError::Truncated {
        expected: declared,
        found: 0,
    })?;
    let json = cfg_line
        .strip_prefix("#config ")
        .ok_or_else(|| fmt(2, "expected `#config` line".into()))?;
    let config = ScenarioConfig::from_json_str(json)?;
    if config.hash() != scenario_hash {
        return Err(StreamError::CorruptConfig);
    }
    match next(3)? {
        Some(c) if c == COLUMNS => {}
        Some(c) => return Err(fmt(3, format!("unexpected column header `{c}`"))),
        None => {
            return Err(StreamError::Truncated {
                expected: declared,
                found: 0,
            })
        }
    }

    let mut events = Vec::with_capacity(declared.min(1 << 26) as usize);
    let mut line_no = 3;
    while let Some(line) = next(line_no + 1)? {
        line_no += 1;
        if line.is_empty() {
            continue;
        }
        let e = parse_row(&line).map_err(|m| fmt(line_no, m))?;
        if events.last().is_some_and(|p: &DetectionEvent| e.t < p.t) {
            return Err(fmt(line_no, "rows are not sorted by time".into()));
        }
        events.push(e);
    }
    if events.len() as u64 != declared {
        return Err(StreamError::Truncated {
            expected: declared,
            found: events.len() as u64,
        });
    }
    Ok((
        StreamHeader {
            version,
            seed,
            n_emissions,
            events: declared,
            scenario_hash,
            config,
        },
        events,
    ))
}

pub fn read_stream_file(path: &Path) -> Result<(StreamHeader, Vec<DetectionEvent>), StreamError> {
    let f = File::open(path).map_err(|source| StreamError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_events(BufReader::new(f))
}

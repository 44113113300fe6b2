//! Run configuration, result records and the files they are written to.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// What was asked for. Only explicitly given flags appear in `parameters`.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

impl RunConfig {
    /// First 16 hex digits of sha256 over the canonical JSON of command,
    /// parameters and seed.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&serde_json::to_value(self).expect("config serializes"))
            .expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn stem(&self) -> String {
        format!("{}-{}", self.command.replace(' ', "-"), self.hash())
    }
}

/// One `(abscissa, value)` sample of a named curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub abscissa: f64,
    pub value: f64,
    pub component: String,
}

impl Row {
    pub fn new(abscissa: f64, value: f64, component: &str) -> Self {
        Row {
            abscissa,
            value,
            component: component.to_string(),
        }
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn csv_payload(rows: &[Row], hash: &str) -> String {
    let mut out = String::from("abscissa,value,component,config_hash\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{hash}", num(r.abscissa), num(r.value), r.component);
    }
    out
}

/// Parses a CSV written by [`csv_payload`].
pub fn parse_csv(text: &str) -> Result<Vec<Row>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("abscissa,value,component,config_hash") => {}
        other => return Err(format!("unexpected CSV header {other:?}")),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 4 {
                return Err(format!("line {}: expected 4 columns", i + 2));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2));
            Ok(Row::new(parse(cols[0])?, parse(cols[1])?, cols[2]))
        })
        .collect()
}

/// Pretty JSON with keys sorted at every level (serde_json's map is a
/// BTreeMap without the `preserve_order` feature).
pub fn stable_json<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("record serializes");
    serde_json::to_string_pretty(&value).expect("value serializes") + "\n"
}

#[derive(Serialize)]
struct Record<'a> {
    config: &'a RunConfig,
    config_hash: String,
    timestamp: u64,
    software_version: &'static str,
    payload: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<&'a [Row]>,
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn record_json(cfg: &RunConfig, payload: &Value, rows: Option<&[Row]>) -> String {
    stable_json(&Record {
        config: cfg,
        config_hash: cfg.hash(),
        timestamp: timestamp(),
        software_version: VERSION,
        payload,
        rows,
    })
}

/// Writes the record (and plot files) under `dir`; returns the paths.
pub fn write_outputs(
    cfg: &RunConfig,
    dir: &Path,
    payload: &Value,
    rows: &[Row],
    plot_data: bool,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = cfg.stem();
    let mut written = Vec::new();
    match cfg.format {
        Format::Csv => {
            let csv = dir.join(format!("{stem}.csv"));
            fs::write(&csv, csv_payload(rows, &cfg.hash()))?;
            let meta = dir.join(format!("{stem}.meta.json"));
            fs::write(&meta, record_json(cfg, payload, None))?;
            written.extend([csv, meta]);
        }
        Format::Json => {
            let json = dir.join(format!("{stem}.json"));
            fs::write(&json, record_json(cfg, payload, Some(rows)))?;
            written.push(json);
        }
    }
    if plot_data {
        let mut curves: BTreeMap<&str, Vec<&Row>> = BTreeMap::new();
        for r in rows {
            curves.entry(&r.component).or_default().push(r);
        }
        for (component, pts) in curves {
            let path = dir.join(format!("{stem}.{component}.dat"));
            let mut body = format!("# {component}: abscissa value\n");
            for r in pts {
                let _ = writeln!(body, "{} {}", num(r.abscissa), num(r.value));
            }
            fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::{Trace, TraceRow};

pub const TRACE_COLUMNS: [&str; 9] =
    ["t", "f_gap", "xi", "delta_rate", "d_xz", "d_yz", "d_yopt", "potential", "decrease_margin"];

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata written ahead of every trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceHeader {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub solver: String,
}

impl TraceHeader {
    pub fn new(config_hash: &str, seed: u64, solver: &str) -> Self {
        TraceHeader {
            version: VERSION.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            solver: solver.to_string(),
        }
    }
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "nan".into()
    } else if a == 0.0 || (1e-4..1e15).contains(&a) || a.is_infinite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn row_fields(r: &TraceRow) -> [String; 9] {
    [
        r.t.to_string(),
        fmt_f64(r.f_gap),
        fmt_f64(r.xi),
        fmt_f64(r.delta_rate),
        fmt_f64(r.d_xz),
        fmt_f64(r.d_yz),
        fmt_opt(r.d_yopt),
        fmt_opt(r.potential),
        fmt_opt(r.decrease_margin),
    ]
}

/// Writes `records` as CSV after `#`-prefixed comment lines.
pub fn csv_with_comments<I, R>(comments: &[String], header: &[&str], records: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut out = Vec::new();
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in records {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn trace_csv(trace: &Trace, header: &TraceHeader) -> Result<String> {
    let comments = vec![
        format!("ragd {}", header.version),
        format!("config_hash sha256:{}", header.config_hash),
        format!("seed {}", header.seed),
        format!("solver {} ({})", header.solver, trace.mode.name()),
    ];
    csv_with_comments(&comments, &TRACE_COLUMNS, trace.rows.iter().map(row_fields))
}

#[derive(Serialize)]
struct TraceJson<'a> {
    #[serde(flatten)]
    header: &'a TraceHeader,
    mode: &'static str,
    gap_reference: crate::solvers::GapReference,
    columns: [&'static str; 9],
    rows: &'a [TraceRow],
    warnings: &'a [String],
}

pub fn trace_json(trace: &Trace, header: &TraceHeader) -> Result<String> {
    let doc = TraceJson {
        header,
        mode: trace.mode.name(),
        gap_reference: trace.gap_reference,
        columns: TRACE_COLUMNS,
        rows: &trace.rows,
        warnings: &trace.warnings,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Filesystem-safe version of a solver label.
pub fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

//! Serialization: 17 significant digits, CSV with a metadata preamble,
//! JSON documents carrying the resolved config, atomic file writes.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `d.dddddddddddddddde±x`.
pub fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

/// Finite numbers keep all 17 digits; anything else becomes `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f64(x).parse().expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn config_json(cfg: &RunConfig) -> Value {
    let v = serde_json::to_value(cfg).expect("config serializes");
    fix_floats(v)
}

// Re-render floats of the embedded config with 17 digits.
fn fix_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => n.as_f64().map_or(Value::Number(n), num),
        Value::Array(a) => Value::Array(a.into_iter().map(fix_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, fix_floats(v))).collect()),
        other => other,
    }
}

/// Top-level JSON document: command, version and config first, then `body`.
pub fn json_document(command: &str, cfg: &RunConfig, body: Map<String, Value>) -> String {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(command.into()));
    m.insert("bogolib_version".into(), Value::String(VERSION.into()));
    m.insert("config".into(), config_json(cfg));
    m.extend(body);
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("json serializes");
    s.push('\n');
    s
}

/// CSV table preceded by `#` lines holding the command, version and config.
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        CsvTable { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, command: &str, cfg: &RunConfig) -> Result<String, CliError> {
        let mut out = format!(
            "# command: {command}\n# bogolib_version: {VERSION}\n# config: {}\n",
            serde_json::to_string(&config_json(cfg)).expect("config serializes")
        );
        out.push_str(&plain_csv(&self.header, &self.rows)?);
        Ok(out)
    }
}

/// RFC-4180 table without preamble.
pub fn plain_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

pub fn opt_cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

/// Writes to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// File when a path is configured, stdout otherwise.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes()).and_then(|_| out.flush()).map_err(io_err)
        }
    }
}

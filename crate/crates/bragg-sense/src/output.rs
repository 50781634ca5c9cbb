//! Result tables and their CSV/JSON files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::{Format, RunConfig};
use crate::AppError;

/// One table value. Non-finite numbers become `null` in JSON.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => a == b || (a.is_nan() && b.is_nan()),
            (Cell::Int(a), Cell::Int(b)) => a == b,
            (Cell::Text(a), Cell::Text(b)) => a == b,
            (Cell::Bool(a), Cell::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::Int(x.into())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Num(_) => s.serialize_none(),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde_json::Value;
        match Value::deserialize(d)? {
            Value::Null => Ok(Cell::Num(f64::NAN)),
            Value::Bool(b) => Ok(Cell::Bool(b)),
            Value::String(t) => Ok(Cell::Text(t)),
            Value::Number(n) => match (n.as_i64(), n.is_f64()) {
                (Some(i), false) => Ok(Cell::Int(i)),
                _ => n.as_f64().map(Cell::Num).ok_or_else(|| D::Error::custom("number out of range")),
            },
            other => Err(D::Error::custom(format!("unexpected table value {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Backend that produced each table.
    pub backends: BTreeMap<String, String>,
}

/// Deterministic part of a run: config echo, provenance and tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub config: RunConfig,
    pub provenance: Provenance,
    pub tables: BTreeMap<String, Table>,
}

/// Run-specific facts kept out of the deterministic files.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub experiment: String,
    pub version: String,
    pub timestamp: String,
    pub runtime_s: f64,
    pub threads: usize,
    pub warnings: Vec<String>,
}

/// `x` rounded to `digits` significant digits, ties to even.
///
/// Uses positional notation for decimal exponents in [-5, digits) and
/// scientific notation otherwise; trailing zeros are dropped.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let (sign, m) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let d: String = m.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &d[..split], &d[split..])
    } else {
        format!("0.{}{d}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{}", trim_zeros(&body))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn cell_text(c: &Cell, digits: usize) -> String {
    match c {
        Cell::Num(x) => format_sig(*x, digits),
        Cell::Int(i) => i.to_string(),
        Cell::Text(t) => t.clone(),
        Cell::Bool(b) => b.to_string(),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Io(format!("{}: {e}", path.display()))
}

pub fn write_csv(path: &Path, table: &Table, digits: usize) -> Result<(), AppError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(&table.columns).map_err(|e| io_err(path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| cell_text(c, digits))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes the record in `format` plus the config echo; returns the paths written.
pub fn emit(record: &ResultRecord, dir: &Path, format: Format, digits: usize) -> Result<Vec<PathBuf>, AppError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            for (name, table) in &record.tables {
                let path = dir.join(format!("{name}.csv"));
                write_csv(&path, table, digits)?;
                written.push(path);
            }
        }
        Format::Json => {
            let path = dir.join(format!("{}.json", record.experiment));
            let text = serde_json::to_string_pretty(record).map_err(|e| io_err(&path, e))?;
            fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
            written.push(path);
        }
    }
    let echo = dir.join(format!("{}.config.toml", record.experiment));
    fs::write(&echo, record.config.to_toml()).map_err(|e| io_err(&echo, e))?;
    written.push(echo);
    Ok(written)
}

pub fn write_meta(meta: &RunMeta, dir: &Path) -> Result<PathBuf, AppError> {
    let path = dir.join(format!("{}.meta.json", meta.experiment));
    let text = serde_json::to_string_pretty(meta).map_err(|e| io_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Reads a JSON record written by [`emit`].
pub fn load_record(path: &Path) -> Result<ResultRecord, AppError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

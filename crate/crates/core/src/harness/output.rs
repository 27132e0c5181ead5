//! Tables, their CSV and JSON renderings, and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{Format, RunConfig};
use super::HarnessError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
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

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if *x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&x.abs()) => format!("{x:e}"),
            Cell::Float(x) => x.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

/// One output file: metadata lines, named columns with units, rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Table {
            name: name.into(),
            metadata: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    fn header(&self, cfg: &RunConfig) -> Vec<(String, String)> {
        let mut h = vec![
            ("tool".to_string(), format!("ep-atlas {}", env!("CARGO_PKG_VERSION"))),
            ("experiment".to_string(), cfg.experiment.to_string()),
            ("config_sha256".to_string(), cfg.digest()),
        ];
        h.extend(self.metadata.iter().cloned());
        h
    }

    pub fn render(&self, cfg: &RunConfig) -> (String, String) {
        match cfg.format {
            Format::Csv => (format!("{}.csv", self.name), self.render_csv(cfg)),
            Format::Json => (format!("{}.json", self.name), self.render_json(cfg)),
        }
    }

    pub fn render_csv(&self, cfg: &RunConfig) -> String {
        let mut s = String::new();
        for (k, v) in self.header(cfg) {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let head: Vec<String> = self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)).collect();
        s.push_str(&head.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn render_json(&self, cfg: &RunConfig) -> String {
        let meta: serde_json::Map<String, Value> =
            self.header(cfg).into_iter().map(|(k, v)| (k, Value::String(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|c| serde_json::to_value(c).unwrap_or(Value::Null)).collect()))
            .collect();
        let v = json!({ "metadata": meta, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&v).expect("table serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub config_sha256: String,
    pub config: RunConfig,
    pub jobs: usize,
    pub wall_time_seconds: f64,
    pub files: Vec<FileRecord>,
}

pub const CONFIG_ECHO: &str = "config.toml";
pub const MANIFEST: &str = "manifest.json";

/// Writes the tables, the resolved config echo and the manifest into `dir`.
pub fn write_run(
    dir: &Path,
    cfg: &RunConfig,
    tables: &[Table],
    jobs: usize,
    wall_time_seconds: f64,
) -> Result<RunManifest, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    let mut write = |name: String, text: String| -> Result<(), HarnessError> {
        let path = dir.join(&name);
        fs::write(&path, text.as_bytes()).map_err(|e| HarnessError::io(&path, e))?;
        files.push(FileRecord {
            name,
            bytes: text.len(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(())
    };
    write(CONFIG_ECHO.to_string(), cfg.to_toml())?;
    for t in tables {
        let (name, text) = t.render(cfg);
        write(name, text)?;
    }
    let manifest = RunManifest {
        tool: "ep-atlas",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.to_string(),
        config_sha256: cfg.digest(),
        config: cfg.clone(),
        jobs,
        wall_time_seconds,
        files,
    };
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(manifest)
}

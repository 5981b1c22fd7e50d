//! Tables written as CSV (with `#` provenance lines) or JSON, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "qcascade";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Identity of a run, stamped into every output.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub preset: String,
    pub seed: u64,
    pub parameters: Value,
}

impl Provenance {
    fn header(&self) -> Value {
        json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "preset": self.preset,
            "seed": self.seed,
        })
    }
}

pub struct Writer {
    dir: PathBuf,
    format: Format,
    provenance: Provenance,
    written: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path, format: Format, provenance: Provenance) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), format, provenance, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `{stem}.csv` or `{stem}.json` according to the output format.
    pub fn table(&mut self, stem: &str, table: &Table) -> CliResult<()> {
        let (name, text) = match self.format {
            Format::Csv => (format!("{stem}.csv"), self.csv(table)),
            Format::Json => (format!("{stem}.json"), self.json_table(table)),
        };
        self.file(&name, &text)
    }

    /// Writes a JSON document wrapped with the provenance block.
    pub fn document(&mut self, name: &str, body: Value) -> CliResult<()> {
        let mut doc = self.provenance.header();
        doc["parameters"] = self.provenance.parameters.clone();
        doc["result"] = body;
        self.file(name, &pretty(&doc))
    }

    /// Writes text verbatim (used for inputs that must stay in their own format).
    pub fn file(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn csv(&self, table: &Table) -> String {
        let p = &self.provenance;
        let mut s = format!(
            "# {TOOL} {VERSION} command={} preset={} seed={}\n# parameters {}\n",
            p.command, p.preset, p.seed, p.parameters
        );
        s.push_str(&table.columns.join(","));
        s.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn json_table(&self, table: &Table) -> String {
        let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let mut doc = self.provenance.header();
        doc["parameters"] = self.provenance.parameters.clone();
        doc["columns"] = json!(table.columns);
        doc["rows"] = Value::Array(rows);
        pretty(&doc)
    }

    pub fn into_written(self) -> Vec<String> {
        self.written
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

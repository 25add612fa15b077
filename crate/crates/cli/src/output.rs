//! Tables and their CSV / JSON encodings.

use std::fmt;
use std::io::Write;

use serde_json::{json, Map, Value};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

pub struct Column {
    pub name: &'static str,
    pub doc: &'static str,
}

/// `--help` text listing the columns of a command.
pub fn columns_help(columns: &[Column]) -> String {
    let mut out = String::from("CSV columns:\n");
    for c in columns {
        out.push_str(&format!("  {:<22} {}\n", c.name, c.doc));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // shortest round-trip form, scientific for tiny and huge values
            Cell::F(x) => write!(f, "{x:?}"),
            Cell::U(x) => write!(f, "{x}"),
            Cell::B(x) => write!(f, "{x}"),
            Cell::S(x) => f.write_str(x),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::F(x) => json!(x),
            Cell::U(x) => json!(x),
            Cell::B(x) => json!(x),
            Cell::S(x) => json!(x),
        }
    }
}

pub struct Table {
    pub columns: &'static [Column],
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key=value` facts written after the metadata line.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &'static [Column]) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl fmt::Display) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

pub struct Metadata {
    pub seed: u64,
    pub command_line: String,
    /// Unix seconds; `None` under `--deterministic`.
    pub timestamp: Option<u64>,
}

impl Metadata {
    fn line(&self) -> String {
        let mut s = format!(
            "entperc={} schema={} seed={} command={:?}",
            env!("CARGO_PKG_VERSION"),
            SCHEMA_VERSION,
            self.seed,
            self.command_line
        );
        if let Some(t) = self.timestamp {
            s.push_str(&format!(" timestamp={t}"));
        }
        s
    }
}

pub fn write_csv(out: &mut dyn Write, table: &Table, meta: &Metadata) -> std::io::Result<()> {
    writeln!(out, "# {}", meta.line())?;
    for (k, v) in &table.notes {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.columns.iter().map(|c| c.name))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string()))?;
    }
    w.flush()
}

pub fn write_json(out: &mut dyn Write, table: &Table, meta: &Metadata) -> std::io::Result<()> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let m: Map<String, Value> = table
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| (c.name.to_string(), v.to_json()))
                .collect();
            Value::Object(m)
        })
        .collect();
    let mut meta_json = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "schema": SCHEMA_VERSION,
        "seed": meta.seed,
        "command": meta.command_line,
    });
    if let Some(t) = meta.timestamp {
        meta_json["timestamp"] = json!(t);
    }
    let notes: Map<String, Value> = table.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let doc = json!({ "meta": meta_json, "notes": notes, "rows": rows });
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)
}

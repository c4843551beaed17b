//! Output formatting: every run emits one table with a reproducibility
//! header (tool version, full flag set, seed, timestamp), as CSV or JSON.
//!
//! CSV uses a '.' decimal separator, '\n' line endings, an always-present
//! header row, and 17-significant-digit scientific notation so files parse
//! back losslessly. Header metadata lives in leading `#` comment lines.

use std::io::Write;
use std::path::PathBuf;

use serde_json::{json, Value};

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Long-form rows (name, i, j, re, im) for a complex matrix.
    pub fn push_matrix(&mut self, name: &str, m: &qestim_core::linalg::CMatrix) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.push(vec![
                    json!(name),
                    json!(i),
                    json!(j),
                    json!(m[(i, j)].re),
                    json!(m[(i, j)].im),
                ]);
            }
        }
    }

    pub fn push_real_matrix(&mut self, name: &str, m: &qestim_core::linalg::RMatrix) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.push(vec![
                    json!(name),
                    json!(i),
                    json!(j),
                    json!(m[(i, j)]),
                    json!(0.0),
                ]);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct RunInfo {
    pub command: String,
    pub seed: Option<u64>,
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    format!("{f:.17e}")
                } else {
                    n.to_string()
                }
            } else {
                n.to_string()
            }
        }
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

pub fn render(table: &Table, info: &RunInfo, format: Format, timestamp: u64) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# tool=qestim {}\n", env!("CARGO_PKG_VERSION")));
            out.push_str(&format!("# command={}\n", info.command));
            match info.seed {
                Some(s) => out.push_str(&format!("# seed={s}\n")),
                None => out.push_str("# seed=none\n"),
            }
            out.push_str(&format!("# timestamp={timestamp}\n"));
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(csv_cell).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let doc = json!({
                "meta": {
                    "tool": format!("qestim {}", env!("CARGO_PKG_VERSION")),
                    "command": info.command,
                    "seed": info.seed,
                    "timestamp": timestamp,
                },
                "columns": table.columns,
                "rows": table.rows,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    }
}

/// Resolve the output destination; a relative path lands under the directory
/// named by `QESTIM_OUTPUT_DIR` when that variable is set.
pub fn resolve_output_path(path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_relative() {
        if let Ok(dir) = std::env::var("QESTIM_OUTPUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(p);
            }
        }
    }
    p
}

pub fn write_out(text: &str, output: Option<&str>) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(resolve_output_path(path), text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

//! Deterministic emission: CSV with 17-significant-digit floats and a
//! '#'-prefixed metadata header, or the same rows as JSON. Identical
//! configs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::AppError;

/// Fixed-width scientific formatting with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // normalize -0.0
        return "0.0000000000000000e0".into();
    }
    format!("{:.16e}", x)
}

/// One table cell: floats, strings, or absent values ("na").
#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Na,
}

impl Cell {
    fn as_csv(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Na => "na".into(),
        }
    }

    fn as_json(&self) -> serde_json::Value {
        match self {
            Cell::Float(x) => serde_json::json!(x),
            Cell::Int(k) => serde_json::json!(k),
            Cell::Text(s) => serde_json::json!(s),
            Cell::Na => serde_json::Value::Null,
        }
    }
}

pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra metadata lines beyond the resolved config.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(name: &'static str, columns: Vec<&'static str>) -> Self {
        Self {
            name,
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        writeln!(out, "# qhe {}", self.name).unwrap();
        writeln!(
            out,
            "# config: {}",
            serde_json::to_string(config).expect("config serializes")
        )
        .unwrap();
        for note in &self.notes {
            writeln!(out, "# {note}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::as_csv).collect();
            writeln!(out, "{}", line.join(",")).unwrap();
        }
        out
    }

    fn to_json(&self, config: &RunConfig) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert((*col).into(), cell.as_json());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({
            "kind": self.name,
            "config": config,
            "notes": self.notes,
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    /// Writes `<out_dir>/<name>.<ext>` in the configured format and returns
    /// the path. The content is fully assembled before the file is touched.
    pub fn write(&self, out_dir: &Path, config: &RunConfig) -> Result<std::path::PathBuf, AppError> {
        let (ext, content) = match config.output.format.as_str() {
            "csv" => ("csv", self.to_csv(config)),
            "json" => ("json", self.to_json(config)),
            other => {
                return Err(AppError::Config(format!(
                    "unknown output format {other:?} (expected csv|json)"
                )))
            }
        };
        std::fs::create_dir_all(out_dir)
            .map_err(|e| AppError::Io(format!("creating {}: {e}", out_dir.display())))?;
        let path = out_dir.join(format!("{}.{ext}", self.name));
        std::fs::write(&path, content)
            .map_err(|e| AppError::Io(format!("writing {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn write_json_value(
    out_dir: &Path,
    file_stem: &str,
    value: &serde_json::Value,
) -> Result<std::path::PathBuf, AppError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| AppError::Io(format!("creating {}: {e}", out_dir.display())))?;
    let path = out_dir.join(format!("{file_stem}.json"));
    let content = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(&path, content)
        .map_err(|e| AppError::Io(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

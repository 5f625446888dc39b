//! Result tables: CSV with a one-line JSON metadata comment, or a JSON
//! document holding the same metadata and a records array.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

pub const SCHEMA: &str = "gridcast.result-table";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub schema: &'static str,
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub config_hash: String,
    /// Seconds since the Unix epoch. The only field that varies between
    /// identical runs.
    pub timestamp: u64,
}

impl Meta {
    pub fn new(command: &'static str, config: Value) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Meta {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config_hash(command, &config),
            config,
            timestamp,
        }
    }
}

/// SHA-256 of the command name and the canonical JSON of its config.
pub fn config_hash(command: &str, config: &Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(config).expect("json values serialize"));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float_text(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) if x.is_finite() => Value::from(*x),
            Cell::Float(x) => Value::from(float_text(*x)),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

fn float_text(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:e}")
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub meta: Meta,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(meta: Meta, columns: Vec<&'static str>) -> Self {
        ResultTable { meta, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out).map_err(|e| CliError::io("<output>", e))
            }
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let header = serde_json::to_string(&self.meta)?;
        writeln!(out, "# {header}").map_err(|e| CliError::io("<output>", e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush().map_err(|e| CliError::io("<output>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    m.insert((*c).to_string(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        serde_json::json!({ "meta": self.meta, "columns": self.columns, "records": records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_has_metadata_comment_and_header() {
        let mut t = ResultTable::new(Meta::new("exact", json!({"t": [1, 2]})), vec!["t", "ratio", "note"]);
        t.push(vec![1u64.into(), 0.5.into(), "a,b".into()]);
        t.push(vec![2u64.into(), Cell::Empty, Cell::Empty]);
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        let meta: Value = serde_json::from_str(lines[0].strip_prefix("# ").unwrap()).unwrap();
        assert_eq!(meta["schema"], SCHEMA);
        assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(lines[1], "t,ratio,note");
        assert_eq!(lines[2], "1,5e-1,\"a,b\"");
        assert_eq!(lines[3], "2,,");
    }

    #[test]
    fn hash_depends_on_config_only() {
        let a = config_hash("exact", &json!({"t": [1]}));
        assert_eq!(a, config_hash("exact", &json!({"t": [1]})));
        assert_ne!(a, config_hash("exact", &json!({"t": [2]})));
        assert_ne!(a, config_hash("scan", &json!({"t": [1]})));
    }
}

//! Tables written as CSV with a commented config header, or as JSON.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig, VERSION};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // shortest representation that parses back to the same f64
            Cell::Float(v) => format!("{v:?}"),
            Cell::Str(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Str(s) => json!(s),
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key = value` lines for the header, after the config.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

pub fn render_csv(cfg: &RunConfig, table: &Table) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for line in cfg.header_lines() {
        writeln!(buf, "# {line}")?;
    }
    for (k, v) in &table.notes {
        writeln!(buf, "# {k} = {v}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush()?;
    }
    Ok(buf)
}

pub fn render_json(cfg: &RunConfig, table: &Table) -> Result<Vec<u8>> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut m = Map::new();
            for (c, v) in table.columns.iter().zip(row) {
                m.insert(c.clone(), v.json());
            }
            Value::Object(m)
        })
        .collect();
    let notes: Map<String, Value> = table.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let doc = json!({
        "version": VERSION,
        "config": cfg,
        "notes": notes,
        "columns": table.columns,
        "rows": rows,
    });
    json_bytes(&doc)
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(doc: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(doc)?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn render(cfg: &RunConfig, table: &Table) -> Result<Vec<u8>> {
    match cfg.format {
        Format::Csv => render_csv(cfg, table),
        Format::Json => render_json(cfg, table),
    }
}

/// Write to the configured file, or stdout.
pub fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &cfg.output_path {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CommonArgs, Command, RunConfig};

    fn cfg() -> RunConfig {
        let cmd = Command::Phi { grid: 4, t: vec![] };
        RunConfig::resolve(&CommonArgs::default(), &cmd).unwrap()
    }

    #[test]
    fn csv_has_header_then_columns() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1i64.into(), 0.1f64.into()]);
        t.note("escaped_mass", 0.25);
        let s = String::from_utf8(render_csv(&cfg(), &t).unwrap()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# orlat "));
        assert!(lines.contains(&"# escaped_mass = 0.25"));
        let body: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["a,b", "1,0.1"]);
    }

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789e10, -2.5] {
            let s = Cell::Float(v).text();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_rows_are_objects() {
        let mut t = Table::new(&["k", "name"]);
        t.push(vec![3i64.into(), "x".into()]);
        let v: Value = serde_json::from_slice(&render_json(&cfg(), &t).unwrap()).unwrap();
        assert_eq!(v["rows"][0]["k"], json!(3));
        assert_eq!(v["rows"][0]["name"], json!("x"));
        assert_eq!(v["columns"], json!(["k", "name"]));
        assert_eq!(v["config"]["command"], json!("phi"));
    }
}

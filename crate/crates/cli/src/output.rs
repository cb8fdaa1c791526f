//! CSV, JSON and manifest writers.
//!
//! Every float leaves through [`fmt17`], so repeated runs with the same
//! manifest produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::{Format, Settings};
use crate::CliError;

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Ordered JSON tree; numbers are written at 17 significant digits and
/// non-finite values as null.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn nums(xs: &[f64]) -> Json {
        Json::Arr(xs.iter().map(|&x| Json::Num(x)).collect())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    fn from_value(v: serde_json::Value) -> Json {
        use serde_json::Value;
        match v {
            Value::Null => Json::Null,
            Value::Bool(b) => Json::Bool(b),
            Value::Number(n) if n.is_f64() => Json::Num(n.as_f64().unwrap_or(f64::NAN)),
            Value::Number(n) => n.as_i64().map(Json::Int).unwrap_or_else(|| Json::Num(n.as_f64().unwrap_or(f64::NAN))),
            Value::String(s) => Json::Str(s),
            Value::Array(a) => Json::Arr(a.into_iter().map(Json::from_value).collect()),
            Value::Object(o) => Json::Obj(o.into_iter().map(|(k, v)| (k, Json::from_value(v))).collect()),
        }
    }

    pub fn from_settings(s: &Settings) -> Json {
        Json::from_value(serde_json::to_value(s).expect("settings serialise"))
    }
}

impl Serialize for Json {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Json::Null => s.serialize_unit(),
            Json::Bool(b) => s.serialize_bool(*b),
            Json::Int(i) => s.serialize_i64(*i),
            Json::Num(x) if x.is_finite() => RawValue::from_string(fmt17(*x)).expect("valid number").serialize(s),
            Json::Num(_) => s.serialize_unit(),
            Json::Str(v) => s.serialize_str(v),
            Json::Arr(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for it in items {
                    seq.serialize_element(it)?;
                }
                seq.end()
            }
            Json::Obj(fields) => {
                let mut map = s.serialize_map(Some(fields.len()))?;
                for (k, v) in fields {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt17(*x),
            Cell::Text(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: Vec<&'static str>) -> Self {
        Self { name: name.to_string(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Column-major JSON object: header name → values.
    pub fn to_json(&self) -> Json {
        Json::Obj(
            self.header
                .iter()
                .enumerate()
                .map(|(j, h)| {
                    let col = self
                        .rows
                        .iter()
                        .map(|r| match &r[j] {
                            Cell::Int(i) => Json::Int(*i),
                            Cell::Num(x) => Json::Num(*x),
                            Cell::Text(t) => Json::Str(t.clone()),
                        })
                        .collect();
                    (h.to_string(), Json::Arr(col))
                })
                .collect(),
        )
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Written as CSV (first table is also echoed to stdout) or folded into the JSON outputs.
    pub tables: Vec<Table>,
    /// Extra scalar outputs (JSON only).
    pub outputs: Vec<(String, Json)>,
    pub diagnostics: Vec<(String, Json)>,
}

impl Report {
    pub fn new(tables: Vec<Table>) -> Self {
        Self { tables, outputs: Vec::new(), diagnostics: Vec::new() }
    }

    pub fn output(mut self, key: &str, v: Json) -> Self {
        self.outputs.push((key.to_string(), v));
        self
    }

    pub fn diagnostic(mut self, key: &str, v: Json) -> Self {
        self.diagnostics.push((key.to_string(), v));
        self
    }

    pub fn to_json(&self, inputs: &Settings) -> Json {
        let mut outputs: Vec<(String, Json)> = self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
        outputs.extend(self.outputs.iter().cloned());
        Json::obj([
            ("inputs", Json::from_settings(inputs)),
            ("outputs", Json::Obj(outputs)),
            ("diagnostics", Json::Obj(self.diagnostics.clone())),
        ])
    }
}

/// Write the report and manifest into the output directory; returns the
/// text echoed to stdout.
pub fn write(settings: &Settings, report: &Report) -> Result<String, CliError> {
    let dir = settings.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let command = settings.command.as_deref().unwrap_or("run");
    save(&dir.join("manifest.toml"), &settings.to_toml())?;
    match settings.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut first = None;
            for t in &report.tables {
                let text = t.to_csv()?;
                save(&dir.join(format!("{}.csv", t.name)), &text)?;
                first.get_or_insert(text);
            }
            if !report.diagnostics.is_empty() {
                let diag = serde_json::to_string_pretty(&Json::Obj(report.diagnostics.clone())).expect("json");
                save(&dir.join(format!("{command}-diagnostics.json")), &(diag + "\n"))?;
            }
            Ok(first.unwrap_or_default())
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&report.to_json(settings)).expect("json") + "\n";
            save(&dir.join(format!("{command}.json")), &text)?;
            Ok(text)
        }
    }
}

fn save(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io(path, e))
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

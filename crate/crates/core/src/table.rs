//! Tabular interchange files: CSV with a provenance comment line, or JSON
//! lines with a leading provenance object.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::fnv1a;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': cannot parse '{value}'")]
    Value {
        row: usize,
        column: String,
        value: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json-lines" => Ok(Format::JsonLines),
            _ => Err(format!("unknown output format '{s}'")),
        }
    }
}

impl Format {
    pub fn for_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::JsonLines,
            _ => Format::Csv,
        }
    }
}

/// Tool version, seed and a hash of the command configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub config: String,
}

impl Provenance {
    pub fn new(seed: Option<u64>, config: impl Into<String>) -> Self {
        Provenance {
            seed,
            config: config.into(),
        }
    }

    pub fn line(&self) -> String {
        let seed = self
            .seed
            .map_or_else(|| "none".to_owned(), |s| s.to_string());
        format!(
            "depdrift {} seed={} config={:016x}",
            env!("CARGO_PKG_VERSION"),
            seed,
            fnv1a(self.config.as_bytes())
        )
    }
}

/// Fixed six-decimal rendering of reals.
pub fn fmt_real(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize, TableError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TableError::MissingColumn(name.to_owned()))
    }

    pub fn render(&self, format: Format, prov: &Provenance) -> String {
        match format {
            Format::Csv => self.render_csv(prov),
            Format::JsonLines => self.render_jsonl(prov),
        }
    }

    fn render_csv(&self, prov: &Provenance) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body =
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input");
        format!("# {}\n{}", prov.line(), body)
    }

    fn render_jsonl(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", serde_json::json!({ "_provenance": prov.line() }));
        for r in &self.rows {
            let mut obj = Map::new();
            for (k, v) in self.header.iter().zip(r) {
                obj.insert(k.clone(), json_value(v));
            }
            let _ = writeln!(out, "{}", Value::Object(obj));
        }
        out
    }

    pub fn write(&self, path: &Path, format: Format, prov: &Provenance) -> Result<(), TableError> {
        std::fs::write(path, self.render(format, prov)).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn parse(text: &str, format: Format) -> Result<Table, TableError> {
        match format {
            Format::Csv => {
                let mut r = csv::ReaderBuilder::new()
                    .comment(Some(b'#'))
                    .from_reader(text.as_bytes());
                let header = r.headers()?.iter().map(str::to_owned).collect();
                let mut rows = Vec::new();
                for rec in r.records() {
                    rows.push(rec?.iter().map(str::to_owned).collect());
                }
                Ok(Table { header, rows })
            }
            Format::JsonLines => parse_jsonl(text),
        }
    }

    pub fn read(path: &Path) -> Result<Table, TableError> {
        let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Table::parse(&text, Format::for_path(path))
    }
}

// Numbers stay numbers, empty cells become null.
fn json_value(v: &str) -> Value {
    if v.is_empty() {
        return Value::Null;
    }
    if let Ok(i) = v.parse::<i64>() {
        if i.to_string() == v {
            return Value::from(i);
        }
    }
    if v.contains('.') && !v.starts_with('.') && !v.ends_with('.') {
        if let Ok(f) = v.parse::<f64>() {
            if f.is_finite() {
                if let Ok(n) = serde_json::from_str::<Value>(v) {
                    return n;
                }
            }
        }
    }
    Value::String(v.to_owned())
}

fn parse_jsonl(text: &str) -> Result<Table, TableError> {
    let mut header: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TableError::Json {
            line: i + 1,
            message,
        };
        let value: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| err("expected an object".into()))?;
        if obj.contains_key("_provenance") {
            continue;
        }
        if header.is_empty() {
            header = obj.keys().cloned().collect();
        }
        let row = header
            .iter()
            .map(|k| match obj.get(k) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
            })
            .collect();
        rows.push(row);
    }
    Ok(Table { header, rows })
}

//! Result tables: fixed column order, LF line endings, floats with 12
//! significant digits. JSON output is an array of objects keyed by the same
//! column names.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    /// Missing value, e.g. an undefined correlation.
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Formats a float with at most 12 significant digits, in positional
/// notation unless the magnitude is extreme.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..15).contains(&mag) {
        let s = format!("{x:.11e}");
        let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
        return format!("{}e{}", trim_zeros(mant), exp);
    }
    let decimals = (11 - mag).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(cell_text))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.clone(), cell_json(c)))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn write<W: Write>(&self, mut w: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &self.to_json())?;
                w.write_all(b"\n")?;
                Ok(())
            }
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Float values of a column; non-float cells are skipped.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(k) = self.column(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match r[k] {
                Cell::Float(x) => Some(x),
                _ => None,
            })
            .collect()
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Float(x) => format_float(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        // round through the CSV text so both formats carry the same digits
        Cell::Float(x) => format_float(*x)
            .parse::<f64>()
            .ok()
            .and_then(serde_json::Number::from_f64)
            .map_or(Value::Null, Value::Number),
        Cell::Int(i) => Value::from(*i),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Empty => Value::Null,
    }
}

/// Writes a table to `path` in the requested format.
pub fn save_results(table: &Table, path: &Path, format: Format) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    table.write(f, format)
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(invalid("format", format!("`{s}` is not csv or json"))),
        }
    }
}

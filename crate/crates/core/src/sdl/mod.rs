//! Scientific data language: a typed tabular data model, its canonical text
//! form, and CSV ingestion with automatic type recognition.
//!
//! A dataset block looks like
//!
//! ```text
//! dataset "iris" {
//!   domain: /life/botany
//!   attr units: "cm"
//!   column sepal_length: real labels "length"
//!   column species: categorical("setosa", "virginica")
//!   rows inline [
//!     5.1, "setosa"
//!     ?, "virginica"
//!   ]
//! }
//! ```
//!
//! `?` marks a missing value. Rows may also come from `rows file "<path>"`,
//! a CSV file whose header repeats the declared column names.

mod csv_ingest;
pub(crate) mod lex;
mod parse;
mod write;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_ingest::{ingest_csv, CATEGORICAL_MIN_THRESHOLD};
pub use parse::{parse_sdl, parse_sdl_file, parse_sdl_with_base};
pub use write::serialize_sdl;

/// Errors raised while reading or validating datasets.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdlError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("type mismatch in column `{column}` row {row}: expected {expected}")]
    TypeMismatch {
        column: String,
        row: usize,
        expected: String,
    },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("empty input")]
    EmptyInput,
    #[error("ragged row at line {0}")]
    RaggedRow(usize),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Column element type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataType {
    Real,
    Int,
    Bool,
    /// Category names; a value `Category(i)` refers to `categories[i]`.
    Categorical(Vec<String>),
    Text,
    /// Seconds since the Unix epoch, written as ISO-8601.
    DateTime,
}

impl DataType {
    /// Keyword used in the text format.
    pub fn keyword(&self) -> &'static str {
        match self {
            DataType::Real => "real",
            DataType::Int => "int",
            DataType::Bool => "bool",
            DataType::Categorical(_) => "categorical",
            DataType::Text => "text",
            DataType::DateTime => "datetime",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, DataType::Real | DataType::Int)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DataType::Real => "Real",
            DataType::Int => "Int",
            DataType::Bool => "Bool",
            DataType::Categorical(_) => "Categorical",
            DataType::Text => "Text",
            DataType::DateTime => "DateTime",
        };
        f.write_str(name)
    }
}

/// A single cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Missing,
    Real(f64),
    Int(i64),
    Bool(bool),
    Category(u32),
    Text(String),
    DateTime(i64),
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Numeric view used by solvers. Categories and text have none.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Real(v) => Some(v),
            Value::Int(v) => Some(v as f64),
            Value::Bool(b) => Some(if b { 1.0 } else { 0.0 }),
            Value::DateTime(s) => Some(s as f64),
            _ => None,
        }
    }

    /// Whether the value may live in a column of type `dtype`.
    pub fn conforms_to(&self, dtype: &DataType) -> bool {
        match (self, dtype) {
            (Value::Missing, _) => true,
            (Value::Real(v), DataType::Real) => v.is_finite(),
            (Value::Int(_), DataType::Int) => true,
            (Value::Bool(_), DataType::Bool) => true,
            (Value::Category(i), DataType::Categorical(cats)) => (*i as usize) < cats.len(),
            (Value::Text(_), DataType::Text) => true,
            (Value::DateTime(_), DataType::DateTime) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub dtype: DataType,
    pub values: Vec<Value>,
    pub labels: Vec<String>,
}

impl Column {
    pub fn new(name: impl Into<String>, dtype: DataType, values: Vec<Value>) -> Self {
        Column {
            name: name.into(),
            dtype,
            values,
            labels: Vec::new(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = labels;
        self
    }

    /// Real-valued column from plain numbers.
    pub fn real(name: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Self {
        Column::new(name, DataType::Real, values.into_iter().map(Value::Real).collect())
    }

    /// Categorical column; categories are listed in first-appearance order.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        let mut cats: Vec<String> = Vec::new();
        let mut out = Vec::with_capacity(values.len());
        for v in values {
            let v = v.as_ref();
            let idx = match cats.iter().position(|c| c == v) {
                Some(i) => i,
                None => {
                    cats.push(v.to_string());
                    cats.len() - 1
                }
            };
            out.push(Value::Category(idx as u32));
        }
        Column::new(name, DataType::Categorical(cats), out)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_missing()).count()
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.dtype {
            DataType::Categorical(c) => Some(c),
            _ => None,
        }
    }
}

/// Typed table with semantic annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub domain_path: String,
    pub columns: Vec<Column>,
    pub attributes: BTreeMap<String, String>,
    pub row_count: usize,
}

impl Dataset {
    /// Builds and validates a dataset; `row_count` is taken from the columns.
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, SdlError> {
        let row_count = columns.first().map_or(0, |c| c.values.len());
        let d = Dataset {
            name: name.into(),
            domain_path: String::new(),
            columns,
            attributes: BTreeMap::new(),
            row_count,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), SdlError> {
        validate_domain_path(&self.domain_path)?;
        let mut seen = HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(SdlError::DuplicateColumn(col.name.clone()));
            }
            if col.values.len() != self.row_count {
                return Err(SdlError::Invalid(format!(
                    "column `{}` has {} values, expected {}",
                    col.name,
                    col.values.len(),
                    self.row_count
                )));
            }
            for (row, v) in col.values.iter().enumerate() {
                if !v.conforms_to(&col.dtype) {
                    return Err(SdlError::TypeMismatch {
                        column: col.name.clone(),
                        row,
                        expected: col.dtype.to_string(),
                    });
                }
            }
        }
        if self.columns.is_empty() && self.row_count != 0 {
            return Err(SdlError::Invalid("rows without columns".into()));
        }
        Ok(())
    }

    /// Copy restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                dtype: c.dtype.clone(),
                values: rows.iter().map(|&r| c.values[r].clone()).collect(),
                labels: c.labels.clone(),
            })
            .collect();
        Dataset {
            name: self.name.clone(),
            domain_path: self.domain_path.clone(),
            columns,
            attributes: self.attributes.clone(),
            row_count: rows.len(),
        }
    }

    /// Copy keeping only the named columns, in dataset order.
    pub fn project(&self, keep: &[&str]) -> Dataset {
        let mut d = self.clone();
        d.columns.retain(|c| keep.contains(&c.name.as_str()));
        d
    }
}

pub(crate) fn validate_domain_path(path: &str) -> Result<(), SdlError> {
    if path.is_empty() {
        return Ok(());
    }
    let rest = path
        .strip_prefix('/')
        .ok_or_else(|| SdlError::Invalid(format!("domain path `{path}` must start with '/'")))?;
    if rest.split('/').any(str::is_empty) {
        return Err(SdlError::Invalid(format!(
            "domain path `{path}` has an empty segment"
        )));
    }
    Ok(())
}

/// Parses `YYYY-MM-DD[THH:MM:SS]` into seconds since the epoch (UTC).
pub fn parse_datetime(s: &str) -> Option<i64> {
    use chrono::{NaiveDate, NaiveDateTime};
    if s.len() == 10 {
        let date = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
        return Some(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
    }
    if s.len() == 19 {
        let dt = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok()?;
        return Some(dt.and_utc().timestamp());
    }
    None
}

/// Formats epoch seconds as `YYYY-MM-DDTHH:MM:SS`.
pub fn format_datetime(secs: i64) -> String {
    match chrono::DateTime::from_timestamp(secs, 0) {
        Some(dt) => dt.naive_utc().format("%Y-%m-%dT%H:%M:%S").to_string(),
        None => secs.to_string(),
    }
}

/// Converts a raw cell to a value of the column type.
///
/// `open_categories` lets a categorical column grow its category list.
pub(crate) fn convert_cell(
    raw: &str,
    dtype: &mut DataType,
    open_categories: bool,
) -> Option<Value> {
    match dtype {
        DataType::Real => raw
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Value::Real),
        DataType::Int => raw.trim().parse::<i64>().ok().map(Value::Int),
        DataType::Bool => match raw.trim() {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
        DataType::Categorical(cats) => match cats.iter().position(|c| c == raw) {
            Some(i) => Some(Value::Category(i as u32)),
            None if open_categories => {
                cats.push(raw.to_string());
                Some(Value::Category((cats.len() - 1) as u32))
            }
            None => None,
        },
        DataType::Text => Some(Value::Text(raw.to_string())),
        DataType::DateTime => parse_datetime(raw.trim()).map(Value::DateTime),
    }
}

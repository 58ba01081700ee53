use std::collections::{BTreeSet, HashSet};

use super::{Column, DataType, Dataset, SdlError, Value};

/// Categorical columns may hold at least this many distinct values.
pub const CATEGORICAL_MIN_THRESHOLD: usize = 20;

/// Reads CSV with a header row and infers a type per column.
///
/// A column is Int if every non-empty cell parses as an integer, else Real
/// if every cell parses as a finite decimal, else Bool if every cell is
/// `true`/`false`, else Categorical when it has at most
/// `max(20, 5% of rows)` distinct values, else Text. Empty cells are missing.
pub fn ingest_csv(bytes: &[u8], name: &str) -> Result<Dataset, SdlError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(SdlError::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| SdlError::Io {
            path: name.to_string(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() {
        return Err(SdlError::EmptyInput);
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(SdlError::DuplicateColumn(h.clone()));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SdlError::Io {
            path: name.to_string(),
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            let line = rec.position().map_or(i + 2, |p| p.line() as usize);
            return Err(SdlError::RaggedRow(line));
        }
        for (col, cell) in cells.iter_mut().zip(rec.iter()) {
            col.push(cell.to_string());
        }
    }

    let rows = cells.first().map_or(0, Vec::len);
    let columns = header
        .into_iter()
        .zip(cells)
        .map(|(h, raw)| infer_column(h, &raw, rows))
        .collect();
    let d = Dataset {
        name: name.to_string(),
        domain_path: String::new(),
        columns,
        attributes: Default::default(),
        row_count: rows,
    };
    d.validate()?;
    Ok(d)
}

fn infer_column(name: String, raw: &[String], rows: usize) -> Column {
    let present: Vec<&str> = raw.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
    let map = |f: &dyn Fn(&str) -> Value| -> Vec<Value> {
        raw.iter()
            .map(|s| if s.is_empty() { Value::Missing } else { f(s) })
            .collect()
    };
    if present.iter().all(|s| s.parse::<i64>().is_ok()) {
        let values = map(&|s| Value::Int(s.parse().expect("checked")));
        return Column::new(name, DataType::Int, values);
    }
    if present
        .iter()
        .all(|s| s.parse::<f64>().map(f64::is_finite).unwrap_or(false))
    {
        let values = map(&|s| Value::Real(s.parse().expect("checked")));
        return Column::new(name, DataType::Real, values);
    }
    if present.iter().all(|s| *s == "true" || *s == "false") {
        let values = map(&|s| Value::Bool(s == "true"));
        return Column::new(name, DataType::Bool, values);
    }
    let distinct: BTreeSet<&str> = present.iter().copied().collect();
    let limit = CATEGORICAL_MIN_THRESHOLD.max((rows as f64 * 0.05).floor() as usize);
    if distinct.len() <= limit {
        let cats: Vec<String> = distinct.iter().map(|s| s.to_string()).collect();
        let values = map(&|s| {
            Value::Category(cats.binary_search_by(|c| c.as_str().cmp(s)).expect("present") as u32)
        });
        return Column::new(name, DataType::Categorical(cats), values);
    }
    Column::new(name, DataType::Text, map(&|s| Value::Text(s.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_and_categorical() {
        let d = ingest_csv(b"a,b\n1,x\n2,y\n", "t").unwrap();
        assert_eq!(d.columns[0].dtype, DataType::Int);
        assert_eq!(
            d.columns[1].dtype,
            DataType::Categorical(vec!["x".into(), "y".into()])
        );
        assert_eq!(d.columns[1].values, vec![Value::Category(0), Value::Category(1)]);
    }

    #[test]
    fn real_bool_missing() {
        let d = ingest_csv(b"r,b\n1.0,true\n2.5,\n", "t").unwrap();
        assert_eq!(d.columns[0].dtype, DataType::Real);
        assert_eq!(d.columns[1].dtype, DataType::Bool);
        assert_eq!(d.columns[1].values[1], Value::Missing);
    }

    #[test]
    fn ragged_and_empty_and_duplicate() {
        assert_eq!(ingest_csv(b"a,b\n1,2,3\n", "t").unwrap_err(), SdlError::RaggedRow(2));
        assert_eq!(ingest_csv(b"", "t").unwrap_err(), SdlError::EmptyInput);
        assert_eq!(
            ingest_csv(b"a,a\n1,2\n", "t").unwrap_err(),
            SdlError::DuplicateColumn("a".into())
        );
    }

    #[test]
    fn quoted_fields_and_text_fallback() {
        let mut csv = String::from("name\n");
        for i in 0..25 {
            csv.push_str(&format!("\"id, {i}\"\n"));
        }
        let d = ingest_csv(csv.as_bytes(), "t").unwrap();
        assert_eq!(d.columns[0].dtype, DataType::Text);
        assert_eq!(d.columns[0].values[3], Value::Text("id, 3".into()));
    }

    #[test]
    fn inferred_values_conform() {
        let d = ingest_csv(b"a,b,c\n1,2.5,u\n,x,\n3,,v\n", "t").unwrap();
        for col in &d.columns {
            assert!(col.values.iter().all(|v| v.conforms_to(&col.dtype)));
        }
        assert_eq!(d.columns[1].dtype, DataType::Categorical(vec!["2.5".into(), "x".into()]));
    }
}

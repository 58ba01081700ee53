use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::lex::{Cursor, Tok, Token};
use super::{convert_cell, validate_domain_path, Column, DataType, Dataset, SdlError, Value};

/// Parses a dataset block. `rows file` paths resolve against the working
/// directory.
pub fn parse_sdl(text: &str) -> Result<Dataset, SdlError> {
    parse_sdl_with_base(text, None)
}

/// Reads and parses a dataset file; `rows file` paths resolve against the
/// directory containing it.
pub fn parse_sdl_file(path: &Path) -> Result<Dataset, SdlError> {
    let text = std::fs::read_to_string(path).map_err(|e| SdlError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_sdl_with_base(&text, path.parent())
}

struct ColumnDecl {
    name: String,
    dtype: DataType,
    /// Declared as bare `categorical`: categories grow on first appearance.
    open: bool,
    labels: Vec<String>,
}

pub fn parse_sdl_with_base(text: &str, base: Option<&Path>) -> Result<Dataset, SdlError> {
    let mut cur = Cursor::new(text)?;
    cur.expect_word("dataset")?;
    let name = cur.string("dataset name")?;
    cur.expect(Tok::LBrace, "`{`")?;

    let mut domain: Option<String> = None;
    let mut attributes = BTreeMap::new();
    let mut decls: Vec<ColumnDecl> = Vec::new();
    let mut rows: Option<Vec<Vec<Value>>> = None;

    loop {
        let tok = cur.next_significant("`}`")?;
        let word = match &tok.tok {
            Tok::RBrace => break,
            Tok::Word(w) => w.clone(),
            _ => return Err(syntax(&tok, "expected a statement or `}`")),
        };
        if rows.is_some() {
            return Err(syntax(&tok, "`rows` must be the last statement"));
        }
        match word.as_str() {
            "domain" => {
                if domain.is_some() {
                    return Err(syntax(&tok, "duplicate `domain`"));
                }
                cur.expect(Tok::Colon, "`:`")?;
                let path = cur.name("domain path")?;
                validate_domain_path(&path).map_err(|e| syntax(&tok, &e.to_string()))?;
                domain = Some(path);
            }
            "attr" => {
                let key = cur.name("attribute key")?;
                cur.expect(Tok::Colon, "`:`")?;
                let value = cur.string("attribute value")?;
                if attributes.insert(key.clone(), value).is_some() {
                    return Err(syntax(&tok, &format!("duplicate attribute `{key}`")));
                }
            }
            "column" => {
                let decl = parse_column(&mut cur)?;
                if decls.iter().any(|d| d.name == decl.name) {
                    return Err(SdlError::DuplicateColumn(decl.name));
                }
                decls.push(decl);
            }
            "rows" => {
                let source = cur.next_significant("`inline` or `file`")?;
                match &source.tok {
                    Tok::Word(w) if w == "inline" => {
                        rows = Some(parse_inline_rows(&mut cur, &mut decls)?);
                    }
                    Tok::Word(w) if w == "file" => {
                        let rel = cur.string("row file path")?;
                        let path = match base {
                            Some(b) => b.join(&rel),
                            None => PathBuf::from(&rel),
                        };
                        rows = Some(read_row_file(&path, &mut decls)?);
                    }
                    _ => return Err(syntax(&source, "expected `inline` or `file`")),
                }
            }
            other => return Err(syntax(&tok, &format!("unknown statement `{other}`"))),
        }
    }
    if !cur.at_end() {
        return Err(cur.error_here("trailing input after dataset block"));
    }
    let rows = rows.ok_or_else(|| cur.error_here("missing `rows` statement"))?;

    let row_count = rows.len();
    let mut columns: Vec<Column> = decls
        .into_iter()
        .map(|d| Column {
            name: d.name,
            dtype: d.dtype,
            values: Vec::with_capacity(row_count),
            labels: d.labels,
        })
        .collect();
    for row in rows {
        for (col, v) in columns.iter_mut().zip(row) {
            col.values.push(v);
        }
    }
    let d = Dataset {
        name,
        domain_path: domain.unwrap_or_default(),
        columns,
        attributes,
        row_count,
    };
    d.validate()?;
    Ok(d)
}

fn syntax(tok: &Token, message: &str) -> SdlError {
    SdlError::Syntax {
        line: tok.line,
        column: tok.col,
        message: message.to_string(),
    }
}

fn parse_column(cur: &mut Cursor) -> Result<ColumnDecl, SdlError> {
    let name = cur.name("column name")?;
    cur.expect(Tok::Colon, "`:`")?;
    let ty = cur.next_significant("column type")?;
    let (dtype, open) = match &ty.tok {
        Tok::Word(w) => match w.as_str() {
            "real" => (DataType::Real, false),
            "int" => (DataType::Int, false),
            "bool" => (DataType::Bool, false),
            "text" => (DataType::Text, false),
            "datetime" => (DataType::DateTime, false),
            "categorical" => {
                if cur.peek_is(&Tok::LParen) {
                    cur.next();
                    let mut cats: Vec<String> = Vec::new();
                    if cur.peek_is(&Tok::RParen) {
                        cur.next();
                    } else {
                        loop {
                            let c = cur.name("category")?;
                            if cats.contains(&c) {
                                return Err(cur.error_here(format!("duplicate category `{c}`")));
                            }
                            cats.push(c);
                            let t = cur.next_significant("`,` or `)`")?;
                            match t.tok {
                                Tok::Comma => continue,
                                Tok::RParen => break,
                                _ => return Err(syntax(&t, "expected `,` or `)`")),
                            }
                        }
                    }
                    (DataType::Categorical(cats), false)
                } else {
                    (DataType::Categorical(Vec::new()), true)
                }
            }
            other => return Err(syntax(&ty, &format!("unknown type `{other}`"))),
        },
        _ => return Err(syntax(&ty, "expected column type")),
    };
    let mut labels = Vec::new();
    if matches!(cur.peek(), Some(Token { tok: Tok::Word(w), .. }) if w == "labels") {
        cur.next();
        labels.push(cur.string("label")?);
        while cur.peek_is(&Tok::Comma) {
            cur.next();
            labels.push(cur.string("label")?);
        }
    }
    Ok(ColumnDecl {
        name,
        dtype,
        open,
        labels,
    })
}

fn cell_value(
    tok: &Token,
    decl: &mut ColumnDecl,
    row: usize,
) -> Result<Value, SdlError> {
    let raw = match &tok.tok {
        Tok::Word(w) if w == "?" => return Ok(Value::Missing),
        Tok::Word(w) => w.as_str(),
        Tok::Str(s) => s.as_str(),
        _ => return Err(syntax(tok, "expected a value")),
    };
    convert_cell(raw, &mut decl.dtype, decl.open).ok_or_else(|| SdlError::TypeMismatch {
        column: decl.name.clone(),
        row,
        expected: decl.dtype.to_string(),
    })
}

/// Rows are newline-separated; values within a row are comma-separated.
fn parse_inline_rows(
    cur: &mut Cursor,
    decls: &mut [ColumnDecl],
) -> Result<Vec<Vec<Value>>, SdlError> {
    cur.expect(Tok::LBracket, "`[`")?;
    let ncols = decls.len();
    let mut rows = Vec::new();
    loop {
        cur.skip_newlines();
        let first = match cur.next() {
            None => return Err(cur.error_here("unterminated row list")),
            Some(t) if t.tok == Tok::RBracket => break,
            Some(t) => t,
        };
        if ncols == 0 {
            return Err(syntax(&first, "rows given for a dataset without columns"));
        }
        let row_idx = rows.len();
        let mut row = Vec::with_capacity(ncols);
        let mut tok = first;
        loop {
            if row.len() == ncols {
                return Err(syntax(&tok, &format!("row has more than {ncols} values")));
            }
            row.push(cell_value(&tok, &mut decls[row.len()], row_idx)?);
            match cur.peek().map(|t| t.tok.clone()) {
                Some(Tok::Comma) => {
                    cur.next();
                    tok = cur
                        .next()
                        .filter(|t| !matches!(t.tok, Tok::Newline | Tok::RBracket))
                        .ok_or_else(|| cur.error_here("expected a value after `,`"))?;
                }
                Some(Tok::Newline) | Some(Tok::RBracket) => break,
                _ => return Err(cur.error_here("expected `,`, newline or `]`")),
            }
        }
        if row.len() != ncols {
            return Err(cur.error_here(format!(
                "row {row_idx} has {} values, expected {ncols}",
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_row_file(path: &Path, decls: &mut [ColumnDecl]) -> Result<Vec<Vec<Value>>, SdlError> {
    let io_err = |message: String| SdlError::Io {
        path: path.display().to_string(),
        message,
    };
    let bytes = std::fs::read(path).map_err(|e| io_err(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let header = reader.headers().map_err(|e| io_err(e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let declared: Vec<&str> = decls.iter().map(|d| d.name.as_str()).collect();
    if names != declared {
        return Err(io_err(format!(
            "header {names:?} does not match declared columns {declared:?}"
        )));
    }
    let mut rows = Vec::new();
    for (row_idx, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_err(e.to_string()))?;
        if rec.len() != decls.len() {
            let line = rec.position().map_or(row_idx + 2, |p| p.line() as usize);
            return Err(SdlError::RaggedRow(line));
        }
        let mut row = Vec::with_capacity(decls.len());
        for (cell, decl) in rec.iter().zip(decls.iter_mut()) {
            if cell.is_empty() {
                row.push(Value::Missing);
                continue;
            }
            let v = convert_cell(cell, &mut decl.dtype, decl.open).ok_or_else(|| {
                SdlError::TypeMismatch {
                    column: decl.name.clone(),
                    row: row_idx,
                    expected: decl.dtype.to_string(),
                }
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_block() {
        let d = parse_sdl(r#"dataset "d" { column x: real  rows inline [1.5] }"#).unwrap();
        assert_eq!(d.name, "d");
        assert_eq!(d.row_count, 1);
        assert_eq!(d.columns.len(), 1);
        assert_eq!(d.columns[0].dtype, DataType::Real);
        assert_eq!(d.columns[0].values, vec![Value::Real(1.5)]);
    }

    #[test]
    fn quoted_text_in_real_column_is_mismatch() {
        let err = parse_sdl(r#"dataset "d" { column x: real rows inline ["abc"] }"#).unwrap_err();
        assert_eq!(
            err,
            SdlError::TypeMismatch {
                column: "x".into(),
                row: 0,
                expected: "Real".into()
            }
        );
    }

    #[test]
    fn full_block_with_everything() {
        let text = r#"
# iris sample
dataset "iris" {
  domain: /life/botany
  attr units: "cm"
  column "sepal length": real labels "length", "sepal"
  column species: categorical
  column seen: datetime
  rows inline [
    5.1, setosa, "2020-01-01"
    ?, virginica, ?

    4.9, setosa, "2020-01-02T10:00:00"
  ]
}
"#;
        let d = parse_sdl(text).unwrap();
        assert_eq!(d.domain_path, "/life/botany");
        assert_eq!(d.attributes["units"], "cm");
        assert_eq!(d.row_count, 3);
        assert_eq!(d.columns[0].labels, vec!["length", "sepal"]);
        assert_eq!(
            d.columns[1].dtype,
            DataType::Categorical(vec!["setosa".into(), "virginica".into()])
        );
        assert_eq!(d.columns[0].values[1], Value::Missing);
        assert_eq!(d.columns[2].values[0], Value::DateTime(1_577_836_800));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_sdl("dataset \"d\" {\n  colum x: real\n}").unwrap_err();
        assert!(matches!(err, SdlError::Syntax { line: 2, column: 3, .. }), "{err:?}");
        let err = parse_sdl(r#"dataset "d" { column x: real rows inline [1, 2] }"#).unwrap_err();
        assert!(matches!(err, SdlError::Syntax { .. }));
        let err = parse_sdl(r#"dataset "d" { column x: real column x: int rows inline [] }"#)
            .unwrap_err();
        assert_eq!(err, SdlError::DuplicateColumn("x".into()));
        let err = parse_sdl(r#"dataset "d" { column x: real }"#).unwrap_err();
        assert!(matches!(err, SdlError::Syntax { .. }));
        let err = parse_sdl(r#"dataset "d" { column c: categorical("a") rows inline [b] }"#)
            .unwrap_err();
        assert!(matches!(err, SdlError::TypeMismatch { row: 0, .. }));
    }

    #[test]
    fn row_file_source() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("rows.csv"), "x,c\n1.5,a\n,b\n").unwrap();
        let sdl_path = dir.path().join("d.sdl");
        std::fs::write(
            &sdl_path,
            r#"dataset "d" { column x: real column c: categorical rows file "rows.csv" }"#,
        )
        .unwrap();
        let d = parse_sdl_file(&sdl_path).unwrap();
        assert_eq!(d.row_count, 2);
        assert_eq!(d.columns[0].values, vec![Value::Real(1.5), Value::Missing]);

        std::fs::write(dir.path().join("bad.csv"), "x,c\n1,a,z\n").unwrap();
        std::fs::write(
            &sdl_path,
            r#"dataset "d" { column x: real column c: text rows file "bad.csv" }"#,
        )
        .unwrap();
        assert_eq!(parse_sdl_file(&sdl_path).unwrap_err(), SdlError::RaggedRow(2));
    }
}

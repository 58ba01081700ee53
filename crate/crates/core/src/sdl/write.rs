use std::fmt::Write as _;

use super::lex::{is_identifier, quote};
use super::{format_datetime, Column, DataType, Dataset, Value};

fn name_token(s: &str) -> String {
    if is_identifier(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn value_token(v: &Value, col: &Column) -> String {
    match v {
        Value::Missing => "?".to_string(),
        // Debug formatting is the shortest string that parses back to the same bits.
        Value::Real(x) => format!("{x:?}"),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Category(i) => match &col.dtype {
            DataType::Categorical(cats) => quote(&cats[*i as usize]),
            _ => unreachable!("category value in non-categorical column"),
        },
        Value::Text(s) => quote(s),
        Value::DateTime(secs) => quote(&format_datetime(*secs)),
    }
}

/// Canonical text form. Attributes come out sorted by key, columns in
/// declaration order, one row per line.
pub fn serialize_sdl(d: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dataset {} {{", quote(&d.name));
    if !d.domain_path.is_empty() {
        let _ = writeln!(out, "  domain: {}", d.domain_path);
    }
    for (k, v) in &d.attributes {
        let _ = writeln!(out, "  attr {}: {}", name_token(k), quote(v));
    }
    for col in &d.columns {
        let _ = write!(out, "  column {}: {}", name_token(&col.name), col.dtype.keyword());
        if let DataType::Categorical(cats) = &col.dtype {
            let list: Vec<String> = cats.iter().map(|c| quote(c)).collect();
            let _ = write!(out, "({})", list.join(", "));
        }
        if !col.labels.is_empty() {
            let list: Vec<String> = col.labels.iter().map(|l| quote(l)).collect();
            let _ = write!(out, " labels {}", list.join(", "));
        }
        out.push('\n');
    }
    if d.row_count == 0 {
        out.push_str("  rows inline []\n");
    } else {
        out.push_str("  rows inline [\n");
        for row in 0..d.row_count {
            let cells: Vec<String> = d
                .columns
                .iter()
                .map(|c| value_token(&c.values[row], c))
                .collect();
            let _ = writeln!(out, "    {}", cells.join(", "));
        }
        out.push_str("  ]\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_sdl, Column, DataType, Dataset, Value};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn attributes_sorted() {
        let mut d = Dataset::new("d", vec![Column::real("x", [1.0])]).unwrap();
        d.attributes.insert("b".into(), "2".into());
        d.attributes.insert("a".into(), "1".into());
        let text = serialize_sdl(&d);
        let a = text.find("attr a").unwrap();
        let b = text.find("attr b").unwrap();
        assert!(a < b);
    }

    #[test]
    fn empty_dataset_text() {
        let d = Dataset::new("d", vec![Column::real("x", [])]).unwrap();
        let text = serialize_sdl(&d);
        assert!(text.contains("rows inline []"));
        assert_eq!(parse_sdl(&text).unwrap(), d);
    }

    #[test]
    fn canonical_text_is_a_fixpoint() {
        let canonical = "dataset \"flowers\" {\n  domain: /life/botany\n  attr a: \"1\"\n  attr units: \"cm\"\n  column \"petal width\": real labels \"width\"\n  column n: int\n  column ok: bool\n  column kind: categorical(\"x\", \"y\")\n  column note: text\n  column at: datetime\n  rows inline [\n    0.1, 3, true, \"y\", \"a \\\"q\\\"\", \"2020-05-06T07:08:09\"\n    ?, ?, ?, ?, ?, ?\n  ]\n}\n";
        let d = parse_sdl(canonical).unwrap();
        assert_eq!(serialize_sdl(&d), canonical);
    }

    fn value_for(dtype: &DataType) -> BoxedStrategy<Value> {
        let non_missing: BoxedStrategy<Value> = match dtype {
            DataType::Real => (-1e6f64..1e6).prop_map(Value::Real).boxed(),
            DataType::Int => any::<i64>().prop_map(Value::Int).boxed(),
            DataType::Bool => any::<bool>().prop_map(Value::Bool).boxed(),
            DataType::Categorical(c) => (0..c.len() as u32).prop_map(Value::Category).boxed(),
            DataType::Text => "[ -~]{0,8}".prop_map(Value::Text).boxed(),
            DataType::DateTime => (0i64..4_000_000_000).prop_map(Value::DateTime).boxed(),
        };
        prop_oneof![1 => Just(Value::Missing), 5 => non_missing].boxed()
    }

    fn dtype_strategy() -> impl Strategy<Value = DataType> {
        prop_oneof![
            Just(DataType::Real),
            Just(DataType::Int),
            Just(DataType::Bool),
            Just(DataType::Text),
            Just(DataType::DateTime),
            prop::collection::btree_set("[a-z?\" ]{1,4}", 1..4)
                .prop_map(|s| DataType::Categorical(s.into_iter().collect())),
        ]
    }

    fn dataset_strategy() -> impl Strategy<Value = Dataset> {
        (
            prop::collection::vec(dtype_strategy(), 1..5),
            0usize..6,
            "[a-z]{0,3}",
            prop::collection::btree_map("[a-z]{1,3}", "[ -~]{0,5}", 0..3),
        )
            .prop_flat_map(|(types, rows, dom, attrs)| {
                let cols: Vec<_> = types
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| {
                        prop::collection::vec(value_for(&t), rows)
                            .prop_map(move |vals| Column::new(format!("c{i}"), t.clone(), vals))
                    })
                    .collect();
                (cols, Just(dom), Just(attrs))
            })
            .prop_map(|(cols, dom, attrs)| {
                let mut d = Dataset::new("ds", cols).unwrap();
                if !dom.is_empty() {
                    d.domain_path = format!("/{dom}");
                }
                d.attributes = attrs;
                d
            })
    }

    proptest! {
        #[test]
        fn parse_inverts_serialize(d in dataset_strategy()) {
            let text = serialize_sdl(&d);
            prop_assert_eq!(parse_sdl(&text).unwrap(), d);
        }
    }
}

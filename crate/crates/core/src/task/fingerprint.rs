use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{TaskError, TaskKind, TaskSpec};
use crate::sdl::{DataType, Dataset, Value};

pub const FINGERPRINT_LEN: usize = 7;

/// Meta-features identifying a task family:
/// `[log10(rows), log10(features+1), frac_numeric, frac_categorical,
/// frac_text, target_cardinality, missing_frac]`.
///
/// `features` counts non-target columns; the fractions are over all columns.
/// Real and Int count as numeric, Categorical and Bool as categorical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFingerprint {
    pub kind: TaskKind,
    pub features: [f64; FINGERPRINT_LEN],
}

pub fn fingerprint(d: &Dataset, t: &TaskSpec) -> Result<TaskFingerprint, TaskError> {
    for target in &t.targets {
        if d.column(target).is_none() {
            return Err(TaskError::UnknownTargetColumn(target.clone()));
        }
    }
    let ncols = d.columns.len();
    let n_features = d
        .columns
        .iter()
        .filter(|c| !t.targets.contains(&c.name))
        .count();
    let frac = |pred: &dyn Fn(&DataType) -> bool| {
        if ncols == 0 {
            0.0
        } else {
            d.columns.iter().filter(|c| pred(&c.dtype)).count() as f64 / ncols as f64
        }
    };
    let target_cardinality = t
        .first_target()
        .and_then(|name| d.column(name))
        .filter(|c| matches!(c.dtype, DataType::Categorical(_) | DataType::Bool))
        .map(|c| {
            c.values
                .iter()
                .filter_map(|v| match v {
                    Value::Category(i) => Some(*i as u64),
                    Value::Bool(b) => Some(*b as u64),
                    _ => None,
                })
                .collect::<HashSet<_>>()
                .len() as f64
        })
        .unwrap_or(0.0);
    let cells = ncols * d.row_count;
    let missing: usize = d.columns.iter().map(|c| c.missing_count()).sum();
    let missing_frac = if cells == 0 { 0.0 } else { missing as f64 / cells as f64 };
    let rows = (d.row_count.max(1)) as f64;
    Ok(TaskFingerprint {
        kind: t.kind,
        features: [
            rows.log10(),
            ((n_features + 1) as f64).log10(),
            frac(&|dt| dt.is_numeric()),
            frac(&|dt| matches!(dt, DataType::Categorical(_) | DataType::Bool)),
            frac(&|dt| matches!(dt, DataType::Text)),
            target_cardinality,
            missing_frac,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdl::Column;

    fn iris_like() -> Dataset {
        let mut cols: Vec<Column> = (0..4)
            .map(|j| Column::real(format!("f{j}"), (0..150).map(|i| (i * (j + 1)) as f64)))
            .collect();
        let species: Vec<&str> = (0..150).map(|i| ["a", "b", "c"][i % 3]).collect();
        cols.push(Column::categorical("species", &species));
        Dataset::new("iris", cols).unwrap()
    }

    #[test]
    fn iris_shape() {
        let t = TaskSpec::new(TaskKind::Classify, vec!["species".into()], 100, 0);
        let f = fingerprint(&iris_like(), &t).unwrap();
        let expected = [150f64.log10(), 5f64.log10(), 0.8, 0.2, 0.0, 3.0, 0.0];
        for (a, b) in f.features.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{:?}", f.features);
        }
        assert!((f.features[0] - 2.176).abs() < 1e-3);
        assert!((f.features[1] - 0.699).abs() < 1e-3);
    }

    #[test]
    fn cluster_has_no_cardinality_and_counts_missing() {
        // 2 columns x 10 rows, 2 missing cells
        let mut a = Column::real("a", (0..10).map(f64::from));
        let mut b = Column::real("b", (0..10).map(f64::from));
        a.values[3] = Value::Missing;
        b.values[7] = Value::Missing;
        let d = Dataset::new("d", vec![a, b]).unwrap();
        let t = TaskSpec::new(TaskKind::Cluster, vec![], 100, 0);
        let f = fingerprint(&d, &t).unwrap();
        assert_eq!(f.features[5], 0.0);
        assert!((f.features[6] - 0.1).abs() < 1e-12);
        assert!(f.features[2] + f.features[3] + f.features[4] <= 1.0);
    }

    #[test]
    fn unknown_target() {
        let t = TaskSpec::new(TaskKind::Classify, vec!["nope".into()], 100, 0);
        assert_eq!(
            fingerprint(&iris_like(), &t),
            Err(TaskError::UnknownTargetColumn("nope".into()))
        );
    }
}

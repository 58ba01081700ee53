//! Input translation: turns typed dataset columns into the dense numeric
//! matrices the solvers consume.
//!
//! Numeric, boolean and datetime columns map to one feature each with
//! missing cells imputed by the training mean. Categorical columns are
//! one-hot encoded (a missing cell is all zeros). Text columns are ignored.

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::sdl::{Column, DataType, Dataset, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Encoding {
    Numeric { mean: f64 },
    OneHot { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub columns: Vec<(String, Encoding)>,
}

fn is_numeric_like(dtype: &DataType) -> bool {
    matches!(
        dtype,
        DataType::Real | DataType::Int | DataType::Bool | DataType::DateTime
    )
}

impl FeatureSpec {
    /// Learns encodings from `rows` of every column not in `exclude`.
    pub fn fit(d: &Dataset, exclude: &[String], rows: &[usize]) -> FeatureSpec {
        let columns = d
            .columns
            .iter()
            .filter(|c| !exclude.contains(&c.name))
            .filter_map(|c| match &c.dtype {
                dt if is_numeric_like(dt) => {
                    let vals: Vec<f64> = rows.iter().filter_map(|&r| c.values[r].as_f64()).collect();
                    let mean = if vals.is_empty() {
                        0.0
                    } else {
                        vals.iter().sum::<f64>() / vals.len() as f64
                    };
                    Some((c.name.clone(), Encoding::Numeric { mean }))
                }
                DataType::Categorical(cats) => Some((
                    c.name.clone(),
                    Encoding::OneHot {
                        categories: cats.clone(),
                    },
                )),
                _ => None,
            })
            .collect();
        FeatureSpec { columns }
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|(_, e)| match e {
                Encoding::Numeric { .. } => 1,
                Encoding::OneHot { categories } => categories.len(),
            })
            .sum()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Row-major feature matrix for `rows` of `d`.
    pub fn transform(&self, d: &Dataset, rows: &[usize]) -> Result<Vec<Vec<f64>>, SolverError> {
        let cols: Vec<&Column> = self
            .columns
            .iter()
            .map(|(name, enc)| {
                let col = d.column(name).ok_or_else(|| {
                    SolverError::SchemaMismatch(format!("missing column `{name}`"))
                })?;
                let ok = match enc {
                    Encoding::Numeric { .. } => is_numeric_like(&col.dtype),
                    Encoding::OneHot { .. } => matches!(col.dtype, DataType::Categorical(_)),
                };
                if !ok {
                    return Err(SolverError::SchemaMismatch(format!(
                        "column `{name}` has type {}",
                        col.dtype
                    )));
                }
                Ok(col)
            })
            .collect::<Result<_, _>>()?;
        let width = self.width();
        Ok(rows
            .iter()
            .map(|&r| {
                let mut row = Vec::with_capacity(width);
                for ((_, enc), col) in self.columns.iter().zip(&cols) {
                    match enc {
                        Encoding::Numeric { mean } => {
                            row.push(col.values[r].as_f64().unwrap_or(*mean))
                        }
                        Encoding::OneHot { categories } => {
                            let hot = match (&col.values[r], &col.dtype) {
                                (Value::Category(i), DataType::Categorical(names)) => {
                                    let name = &names[*i as usize];
                                    categories.iter().position(|c| c == name)
                                }
                                _ => None,
                            };
                            row.extend((0..categories.len()).map(|j| {
                                if Some(j) == hot {
                                    1.0
                                } else {
                                    0.0
                                }
                            }));
                        }
                    }
                }
                row
            })
            .collect())
    }
}

/// Class labels of `target` for the given rows, skipping missing cells.
/// Returns the kept rows, their labels and the class names.
pub fn class_targets(
    d: &Dataset,
    target: &str,
    rows: &[usize],
) -> Result<(Vec<usize>, Vec<u32>, Vec<String>), SolverError> {
    let col = d
        .column(target)
        .ok_or_else(|| SolverError::SchemaMismatch(format!("missing target `{target}`")))?;
    let classes = match &col.dtype {
        DataType::Categorical(c) => c.clone(),
        _ => return Err(SolverError::TargetNotCategorical(target.to_string())),
    };
    let (kept, labels) = rows
        .iter()
        .filter_map(|&r| match col.values[r] {
            Value::Category(c) => Some((r, c)),
            _ => None,
        })
        .unzip();
    Ok((kept, labels, classes))
}

/// Numeric target values for the given rows, skipping missing cells.
pub fn real_targets(
    d: &Dataset,
    target: &str,
    rows: &[usize],
) -> Result<(Vec<usize>, Vec<f64>), SolverError> {
    let col = d
        .column(target)
        .ok_or_else(|| SolverError::SchemaMismatch(format!("missing target `{target}`")))?;
    if !col.dtype.is_numeric() {
        return Err(SolverError::TargetNotNumeric(target.to_string()));
    }
    Ok(rows
        .iter()
        .filter_map(|&r| col.values[r].as_f64().map(|v| (r, v)))
        .unzip())
}

/// Raw numeric matrix of the named columns; missing cells are an error.
pub fn numeric_matrix(d: &Dataset, columns: &[&str]) -> Result<Vec<Vec<f64>>, SolverError> {
    let cols: Vec<&Column> = columns
        .iter()
        .map(|name| {
            let c = d
                .column(name)
                .ok_or_else(|| SolverError::SchemaMismatch(format!("missing column `{name}`")))?;
            if !c.dtype.is_numeric() {
                return Err(SolverError::NonNumericColumn(name.to_string()));
            }
            Ok(c)
        })
        .collect::<Result<_, _>>()?;
    (0..d.row_count)
        .map(|r| {
            cols.iter()
                .map(|c| {
                    c.values[r].as_f64().ok_or_else(|| {
                        SolverError::Invalid(format!("missing value in `{}` row {r}", c.name))
                    })
                })
                .collect()
        })
        .collect()
}

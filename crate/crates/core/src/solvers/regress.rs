use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::translate::{real_targets, FeatureSpec};
use super::SolverError;
use crate::kernel::{induce_with, parse_program, InduceMode, InduceOptions};
use crate::sdl::Dataset;
use crate::util::Deadline;

const RIDGE: f64 = 1e-8;
/// Rows handed to program search; larger training sets are subsampled.
const INDUCTION_MAX_EXAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict_one(&self, q: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(q).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Least squares with intercept via the ridge-regularized normal equations.
pub fn fit_linear(x: &[Vec<f64>], y: &[f64]) -> Result<LinearFit, SolverError> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(SolverError::TooFewRows("linear fit needs at least 2 rows".into()));
    }
    let width = x[0].len();
    let design = DMatrix::from_fn(x.len(), width + 1, |r, c| if c < width { x[r][c] } else { 1.0 });
    let target = DVector::from_column_slice(y);
    let xtx = design.transpose() * &design + DMatrix::identity(width + 1, width + 1) * RIDGE;
    let xty = design.transpose() * target;
    let beta = match xtx.clone().cholesky() {
        Some(ch) => ch.solve(&xty),
        None => xtx.lu().solve(&xty).ok_or(SolverError::SingularDesign)?,
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(SolverError::SingularDesign);
    }
    Ok(LinearFit {
        coefficients: beta.iter().take(width).copied().collect(),
        intercept: beta[width],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorMethod {
    Linear,
    /// Program search over the features, in best-loss mode, until the
    /// job deadline.
    KernelInduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub features: FeatureSpec,
    pub model: RegressorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RegressorKind {
    Linear(LinearFit),
    /// Induced program plus the residual spread, read as
    /// `y ~ program(x) + N(0, sigma^2)`.
    Program { program: String, sigma: f64 },
}

impl RegressorModel {
    pub fn predict_matrix(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, SolverError> {
        match &self.model {
            RegressorKind::Linear(fit) => Ok(x.iter().map(|q| fit.predict_one(q)).collect()),
            RegressorKind::Program { program, .. } => {
                let p = parse_program(program)?;
                Ok(x.iter().map(|q| p.eval(q).unwrap_or(0.0)).collect())
            }
        }
    }

    pub fn predict(&self, d: &Dataset, rows: &[usize]) -> Result<Vec<f64>, SolverError> {
        self.predict_matrix(&self.features.transform(d, rows)?)
    }
}

/// Fits on `rows` of `d` (all rows when `None`).
pub fn fit_regressor(
    d: &Dataset,
    target: &str,
    method: RegressorMethod,
    rows: Option<&[usize]>,
    seed: u64,
    deadline: &Deadline,
) -> Result<RegressorModel, SolverError> {
    let all: Vec<usize> = (0..d.row_count).collect();
    let rows = rows.unwrap_or(&all);
    let (kept, y) = real_targets(d, target, rows)?;
    if kept.len() < 2 {
        return Err(SolverError::TooFewRows("regression needs at least 2 rows".into()));
    }
    let features = FeatureSpec::fit(d, &[target.to_string()], &kept);
    let x = features.transform(d, &kept)?;
    let model = match method {
        RegressorMethod::Linear => RegressorKind::Linear(fit_linear(&x, &y)?),
        RegressorMethod::KernelInduction => {
            let mut idx: Vec<usize> = (0..x.len()).collect();
            if idx.len() > INDUCTION_MAX_EXAMPLES {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                idx = sample(&mut rng, x.len(), INDUCTION_MAX_EXAMPLES).into_vec();
                idx.sort_unstable();
            }
            let examples: Vec<(Vec<f64>, f64)> = idx.iter().map(|&i| (x[i].clone(), y[i])).collect();
            let opts = InduceOptions::new(InduceMode::BestLoss, deadline.clone());
            let result = induce_with(&examples, features.width(), &opts)?;
            let program = result.best.ok_or(SolverError::Timeout)?;
            let residuals: Vec<f64> = x
                .iter()
                .zip(&y)
                .map(|(q, t)| t - program.eval(q).unwrap_or(0.0))
                .collect();
            RegressorKind::Program {
                program: program.to_string(),
                sigma: sample_std(&residuals),
            }
        }
    };
    Ok(RegressorModel { features, model })
}

pub(crate) fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdl::Column;

    #[test]
    fn line_through_four_points() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..4).map(|i| 2.0 * i as f64 + 1.0).collect();
        let fit = fit_linear(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-6);
        assert!((fit.intercept - 1.0).abs() < 1e-6);
        assert!((fit.predict_one(&[4.0]) - 9.0).abs() < 1e-6);
    }

    #[test]
    fn constant_target() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let fit = fit_linear(&x, &[3.5; 5]).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-6);
        assert!((fit.intercept - 3.5).abs() < 1e-6);
    }

    #[test]
    fn induction_finds_successor() {
        let d = Dataset::new(
            "d",
            vec![
                Column::real("x", [0.0, 1.0, 2.0, 3.0, 7.0]),
                Column::real("y", [1.0, 2.0, 3.0, 4.0, 8.0]),
            ],
        )
        .unwrap();
        let m = fit_regressor(&d, "y", RegressorMethod::KernelInduction, None, 0, &Deadline::after_ms(2000))
            .unwrap();
        assert_eq!(
            m.model,
            RegressorKind::Program {
                program: "(add x0 1)".into(),
                sigma: 0.0
            }
        );
    }

    #[test]
    fn too_few_rows() {
        let d = Dataset::new("d", vec![Column::real("x", [0.0]), Column::real("y", [1.0])]).unwrap();
        assert!(matches!(
            fit_regressor(&d, "y", RegressorMethod::Linear, None, 0, &Deadline::never()),
            Err(SolverError::TooFewRows(_))
        ));
    }
}

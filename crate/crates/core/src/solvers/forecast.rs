use serde::{Deserialize, Serialize};

use super::regress::fit_linear;
use super::SolverError;

pub const AR_CANDIDATES: [usize; 3] = [1, 2, 3];
const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArOrder {
    /// Pick p in {1, 2, 3} by one-step RMSE on the last 20% of the series.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub p: usize,
    pub intercept: f64,
    /// Coefficients for lag 1, lag 2, ...
    pub coefficients: Vec<f64>,
    /// Last `p` observations, oldest first.
    pub tail: Vec<f64>,
}

impl ArModel {
    fn step(&self, history: &[f64]) -> f64 {
        let n = history.len();
        self.intercept
            + self
                .coefficients
                .iter()
                .enumerate()
                .map(|(lag, c)| c * history[n - 1 - lag])
                .sum::<f64>()
    }

    /// Iterated one-step forecasts past the end of the fitted series.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let mut hist = self.tail.clone();
        (0..horizon)
            .map(|_| {
                let next = self.step(&hist);
                hist.push(next);
                next
            })
            .collect()
    }

    /// One-step predictions along `series`, using the fitted tail as the
    /// history before its first element.
    pub fn one_step(&self, series: &[f64]) -> Vec<f64> {
        let mut hist = self.tail.clone();
        series
            .iter()
            .map(|&actual| {
                let pred = self.step(&hist);
                hist.push(actual);
                pred
            })
            .collect()
    }
}

fn fit_order(series: &[f64], p: usize) -> Result<ArModel, SolverError> {
    if series.len() < p + 2 {
        return Err(SolverError::SeriesTooShort {
            len: series.len(),
            needed: p + 2,
        });
    }
    let x: Vec<Vec<f64>> = (p..series.len())
        .map(|t| (1..=p).map(|lag| series[t - lag]).collect())
        .collect();
    let fit = fit_linear(&x, &series[p..])?;
    Ok(ArModel {
        p,
        intercept: fit.intercept,
        coefficients: fit.coefficients,
        tail: series[series.len() - p..].to_vec(),
    })
}

/// Least-squares AR(p) with intercept.
pub fn fit_ar(series: &[f64], order: ArOrder) -> Result<ArModel, SolverError> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Invalid("series contains non-finite values".into()));
    }
    let p = match order {
        ArOrder::Fixed(0) => return Err(SolverError::Invalid("p must be at least 1".into())),
        ArOrder::Fixed(p) => p,
        ArOrder::Auto => select_order(series)?,
    };
    fit_order(series, p)
}

fn select_order(series: &[f64]) -> Result<usize, SolverError> {
    let n = series.len();
    let feasible: Vec<usize> = AR_CANDIDATES.into_iter().filter(|&p| n >= p + 2).collect();
    let Some(&smallest) = feasible.first() else {
        return Err(SolverError::SeriesTooShort { len: n, needed: 3 });
    };
    let n_val = ((VALIDATION_FRACTION * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let (train, val) = series.split_at(n - n_val.min(n));
    let mut best: Option<(usize, f64)> = None;
    for &p in &feasible {
        let Ok(model) = fit_order(train, p) else { continue };
        let preds = model.one_step(val);
        let rmse = (preds.iter().zip(val).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            / val.len() as f64)
            .sqrt();
        // A higher order must beat the incumbent by more than rounding noise.
        let better = match best {
            None => true,
            Some((_, b)) => rmse < b - 1e-9 * (1.0 + b),
        };
        if rmse.is_finite() && better {
            best = Some((p, rmse));
        }
    }
    Ok(best.map_or(smallest, |(p, _)| p))
}

/// Forecasts `horizon` steps past the end of `series`.
pub fn forecast_ar(
    series: &[f64],
    order: ArOrder,
    horizon: usize,
    _seed: u64,
) -> Result<Vec<f64>, SolverError> {
    Ok(fit_ar(series, order)?.forecast(horizon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_trend_continues() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        let f = forecast_ar(&s, ArOrder::Auto, 1, 0).unwrap();
        assert!((f[0] - 11.0).abs() < 1e-6, "{f:?}");
        let f = forecast_ar(&s, ArOrder::Auto, 3, 0).unwrap();
        assert!((f[2] - 13.0).abs() < 1e-5, "{f:?}");
    }

    #[test]
    fn constant_series() {
        let f = forecast_ar(&[4.25; 12], ArOrder::Auto, 4, 0).unwrap();
        for v in f {
            assert!((v - 4.25).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn too_short() {
        assert_eq!(
            forecast_ar(&[1.0, 2.0], ArOrder::Fixed(3), 1, 0).unwrap_err(),
            SolverError::SeriesTooShort { len: 2, needed: 5 }
        );
        assert!(forecast_ar(&[1.0, 2.0], ArOrder::Auto, 1, 0).is_err());
    }

    #[test]
    fn recovers_ar2_coefficients() {
        let mut s = vec![1.0, 2.0];
        for t in 2..60 {
            let v = 0.5 + 0.6 * s[t - 1] - 0.3 * s[t - 2] + ((t * 7919) % 13) as f64 * 0.01;
            s.push(v);
        }
        let m = fit_ar(&s, ArOrder::Fixed(2)).unwrap();
        assert!((m.coefficients[0] - 0.6).abs() < 0.1);
        assert!((m.coefficients[1] + 0.3).abs() < 0.1);
    }
}

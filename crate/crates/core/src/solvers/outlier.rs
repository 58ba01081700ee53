use super::SolverError;
use crate::sdl::Dataset;

/// Lower bound on the leave-one-out spread.
pub const OUTLIER_SIGMA_FLOOR: f64 = 1e-9;

/// Leave-one-out z-score of every row: for each numeric column the row is
/// compared with the mean and sample standard deviation of the other rows;
/// the row score is the largest such z over columns. A row equal to a
/// constant remainder scores 0. Missing cells score 0.
pub fn loo_scores(d: &Dataset) -> Result<Vec<f64>, SolverError> {
    if d.row_count < 3 {
        return Err(SolverError::TooFewRows(format!(
            "outlier detection needs 3 rows, got {}",
            d.row_count
        )));
    }
    let numeric: Vec<_> = d.columns.iter().filter(|c| c.dtype.is_numeric()).collect();
    if numeric.is_empty() {
        return Err(SolverError::NoNumericColumns);
    }
    let mut scores = vec![0.0f64; d.row_count];
    for col in numeric {
        let present: Vec<(usize, f64)> = col
            .values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_f64().map(|x| (i, x)))
            .collect();
        let m = present.len();
        if m < 3 {
            continue;
        }
        let mf = m as f64;
        let mean = present.iter().map(|p| p.1).sum::<f64>() / mf;
        let m2: f64 = present.iter().map(|p| (p.1 - mean) * (p.1 - mean)).sum();
        for &(row, x) in &present {
            let dev = x - mean;
            let loo_mean = (mf * mean - x) / (mf - 1.0);
            let loo_m2 = (m2 - dev * dev * mf / (mf - 1.0)).max(0.0);
            let loo_sd = (loo_m2 / (mf - 2.0)).sqrt();
            let gap = (x - loo_mean).abs();
            let z = if loo_sd < OUTLIER_SIGMA_FLOOR && gap < OUTLIER_SIGMA_FLOOR {
                0.0
            } else {
                gap / loo_sd.max(OUTLIER_SIGMA_FLOOR)
            };
            scores[row] = scores[row].max(z);
        }
    }
    Ok(scores)
}

/// Rows scoring above `z_threshold`, highest first (ties by row index).
pub fn detect_outliers_loo(d: &Dataset, z_threshold: f64) -> Result<Vec<(usize, f64)>, SolverError> {
    let scores = loo_scores(d)?;
    let mut flagged: Vec<(usize, f64)> = scores
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s > z_threshold)
        .collect();
    flagged.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(flagged)
}

use super::{MetricId, TaskError};

/// Inputs for [`evaluate_metric`], one shape per metric family.
#[derive(Debug, Clone, Copy)]
pub enum MetricInput<'a> {
    /// Class labels.
    Labels { predicted: &'a [u32], truth: &'a [u32] },
    /// Real-valued predictions.
    Values { predicted: &'a [f64], truth: &'a [f64] },
    /// Points (row-major) and cluster assignments.
    Clustering { points: &'a [Vec<f64>], assignments: &'a [usize] },
    /// Outlier scores per row and ground-truth flags.
    Ranking { scores: &'a [f64], truth: &'a [bool] },
    /// Value of an objective at the returned optimum.
    Objective(f64),
}

pub fn evaluate_metric(metric: MetricId, input: MetricInput<'_>) -> Result<f64, TaskError> {
    match (metric, input) {
        (MetricId::Accuracy, MetricInput::Labels { predicted, truth }) => accuracy(predicted, truth),
        (MetricId::Rmse, MetricInput::Values { predicted, truth }) => rmse(predicted, truth),
        (MetricId::Smape, MetricInput::Values { predicted, truth }) => smape(predicted, truth),
        (MetricId::Silhouette, MetricInput::Clustering { points, assignments }) => {
            silhouette(points, assignments)
        }
        (MetricId::PrecisionAtK, MetricInput::Ranking { scores, truth }) => {
            precision_at_k(scores, truth)
        }
        (MetricId::Objective, MetricInput::Objective(v)) => Ok(v),
        (m, _) => Err(TaskError::UndefinedMetricForKind(m)),
    }
}

fn same_len(a: usize, b: usize) -> Result<(), TaskError> {
    if a != b {
        return Err(TaskError::LengthMismatch(a, b));
    }
    Ok(())
}

/// Fraction of equal labels; 0 for empty input.
pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> Result<f64, TaskError> {
    same_len(predicted.len(), truth.len())?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64, TaskError> {
    same_len(predicted.len(), truth.len())?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let mse = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truth.len() as f64;
    Ok(mse.sqrt())
}

/// Symmetric MAPE, mean of `2|p-t| / (|p|+|t|)` with `0/0 = 0`.
pub fn smape(predicted: &[f64], truth: &[f64]) -> Result<f64, TaskError> {
    same_len(predicted.len(), truth.len())?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let denom = p.abs() + t.abs();
            if denom == 0.0 {
                0.0
            } else {
                2.0 * (p - t).abs() / denom
            }
        })
        .sum();
    Ok(total / truth.len() as f64)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean silhouette with Euclidean distance. Points in singleton clusters
/// contribute 0; a single cluster overall scores 0.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64, TaskError> {
    same_len(assignments.len(), points.len())?;
    let n = points.len();
    if n == 0 {
        return Ok(0.0);
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[assignments[j]] += euclid(&points[i], &points[j]);
            }
        }
        let own = assignments[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Precision among the `k` highest-scored rows, where `k` is the number of
/// true outliers. Ties in score keep the lower row first. No true outliers
/// scores 1 when nothing scores above zero, else 0.
pub fn precision_at_k(scores: &[f64], truth: &[bool]) -> Result<f64, TaskError> {
    same_len(scores.len(), truth.len())?;
    let k = truth.iter().filter(|&&t| t).count();
    if k == 0 {
        return Ok(if scores.iter().all(|&s| s <= 0.0) { 1.0 } else { 0.0 });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let hits = order[..k].iter().filter(|&&i| truth[i]).count();
    Ok(hits as f64 / k as f64)
}

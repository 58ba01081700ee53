use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sq_dist, SolverError};
use crate::util::{derive_seed, Deadline};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the final partition.
    pub sse: f64,
    pub iterations: usize,
    /// SSE after each assignment step.
    pub sse_history: Vec<f64>,
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<usize, SolverError> {
    if k == 0 {
        return Err(SolverError::Invalid("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(SolverError::KTooLarge {
            k,
            rows: points.len(),
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(SolverError::Invalid("points must be finite rows of equal width".into()));
    }
    Ok(dim)
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn means(points: &[Vec<f64>], assignments: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, n), prev)| {
            if n == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|v| v / n as f64).collect()
            }
        })
        .collect()
}

fn sse_of(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

pub const KMEANS_RESTARTS: usize = 10;

/// k-means++ choice of `k` distinct rows: the first uniformly, each next
/// with probability proportional to its squared distance from the rows
/// already chosen (uniformly among the rest if all distances are zero).
fn seed_rows(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(&mut rng),
            Err(_) => {
                let rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                rest[rng.gen_range(0..rest.len())]
            }
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
        for &c in &chosen {
            d2[c] = 0.0;
        }
    }
    chosen
}

/// Lloyd's algorithm from `k` distinct seeded-random rows, until the
/// assignment stops changing or `max_iters` updates have run. Restarts
/// from `KMEANS_RESTARTS` seeds and keeps the lowest SSE (earliest on ties).
pub fn fit_kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KMeansFit, SolverError> {
    fit_kmeans_until(points, k, seed, max_iters, &Deadline::never())
}

/// As [`fit_kmeans`], stopping early with the current partition when the
/// deadline passes.
pub fn fit_kmeans_until(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
    deadline: &Deadline,
) -> Result<KMeansFit, SolverError> {
    check_points(points, k)?;
    let mut best = lloyd(points, k, seed, max_iters, deadline);
    for restart in 1..KMEANS_RESTARTS {
        if deadline.expired() {
            break;
        }
        let fit = lloyd(points, k, derive_seed(seed, &format!("restart{restart}")), max_iters, deadline);
        if fit.sse < best.sse {
            best = fit;
        }
    }
    Ok(best)
}

fn lloyd(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize, deadline: &Deadline) -> KMeansFit {
    let mut centroids: Vec<Vec<f64>> = seed_rows(points, k, seed)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();

    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut sse_history = vec![sse_of(points, &assignments, &centroids)];
    let mut iterations = 0;
    while iterations < max_iters && !deadline.expired() {
        iterations += 1;
        centroids = means(points, &assignments, &centroids);
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        sse_history.push(sse_of(points, &next, &centroids));
        if next == assignments {
            break;
        }
        assignments = next;
    }
    centroids = means(points, &assignments, &centroids);
    let sse = sse_of(points, &assignments, &centroids);
    KMeansFit {
        assignments,
        centroids,
        sse,
        iterations,
        sse_history,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMethod {
    Agglomerative,
    GmmEm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub assignments: Vec<usize>,
    pub model: GmmModel,
    /// Log-likelihood at the initial parameters and after every EM step.
    pub loglik_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AltClusterFit {
    /// Ward partition with the centroid of each final cluster.
    Agglomerative {
        assignments: Vec<usize>,
        centroids: Vec<Vec<f64>>,
    },
    Gmm(GmmFit),
}

impl AltClusterFit {
    pub fn assignments(&self) -> &[usize] {
        match self {
            AltClusterFit::Agglomerative { assignments, .. } => assignments,
            AltClusterFit::Gmm(f) => &f.assignments,
        }
    }
}

pub fn fit_cluster_alt(
    points: &[Vec<f64>],
    method: ClusterMethod,
    k: usize,
    seed: u64,
) -> Result<AltClusterFit, SolverError> {
    match method {
        ClusterMethod::Agglomerative => {
            let (assignments, centroids) = fit_agglomerative(points, k, &Deadline::never())?;
            Ok(AltClusterFit::Agglomerative {
                assignments,
                centroids,
            })
        }
        ClusterMethod::GmmEm => fit_gmm(points, k, seed, &Deadline::never()).map(AltClusterFit::Gmm),
    }
}

/// Ward-linkage agglomeration down to `k` clusters. The cheapest merge
/// wins; equal costs go to the pair with the smallest indices, where
/// clusters are indexed in order of their smallest member.
pub fn fit_agglomerative(
    points: &[Vec<f64>],
    k: usize,
    deadline: &Deadline,
) -> Result<(Vec<usize>, Vec<Vec<f64>>), SolverError> {
    check_points(points, k)?;
    struct Cluster {
        members: Vec<usize>,
        centroid: Vec<f64>,
    }
    let mut clusters: Vec<Cluster> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Cluster {
            members: vec![i],
            centroid: p.clone(),
        })
        .collect();
    let ward = |a: &Cluster, b: &Cluster| {
        let (na, nb) = (a.members.len() as f64, b.members.len() as f64);
        na * nb / (na + nb) * sq_dist(&a.centroid, &b.centroid)
    };
    while clusters.len() > k {
        if deadline.expired() {
            return Err(SolverError::Timeout);
        }
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let cost = ward(&clusters[i], &clusters[j]);
                if cost < best.2 {
                    best = (i, j, cost);
                }
            }
        }
        let (i, j, _) = best;
        let b = clusters.remove(j);
        let a = &mut clusters[i];
        let (na, nb) = (a.members.len() as f64, b.members.len() as f64);
        for (c, v) in a.centroid.iter_mut().zip(&b.centroid) {
            *c = (*c * na + v * nb) / (na + nb);
        }
        a.members.extend(b.members);
    }
    let mut assignments = vec![0; points.len()];
    for (label, c) in clusters.iter().enumerate() {
        for &m in &c.members {
            assignments[m] = label;
        }
    }
    Ok((assignments, clusters.into_iter().map(|c| c.centroid).collect()))
}

const GMM_VAR_FLOOR: f64 = 1e-6;
const GMM_TOL: f64 = 1e-6;
const GMM_MAX_ITERS: usize = 100;

fn log_densities(p: &[f64], model: &GmmModel) -> Vec<f64> {
    use std::f64::consts::PI;
    (0..model.weights.len())
        .map(|j| {
            let mut lp = model.weights[j].ln();
            for ((x, m), v) in p.iter().zip(&model.means[j]).zip(&model.variances[j]) {
                lp -= 0.5 * ((2.0 * PI * v).ln() + (x - m) * (x - m) / v);
            }
            lp
        })
        .collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl GmmModel {
    /// Most responsible component per point; ties go to the lower index.
    pub fn assign(&self, points: &[Vec<f64>]) -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                let ld = log_densities(p, self);
                let mut best = 0;
                for j in 1..ld.len() {
                    if ld[j] > ld[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn log_likelihood(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().map(|p| log_sum_exp(&log_densities(p, self))).sum()
    }
}

/// Diagonal-covariance EM started from the k-means partition. Stops when
/// the log-likelihood gains less than 1e-6 or after 100 iterations.
pub fn fit_gmm(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    deadline: &Deadline,
) -> Result<GmmFit, SolverError> {
    let dim = check_points(points, k)?;
    let n = points.len();
    let init = fit_kmeans_until(points, k, seed, 100, deadline)?;
    let mut model = GmmModel {
        weights: vec![0.0; k],
        means: init.centroids.clone(),
        variances: vec![vec![0.0; dim]; k],
    };
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(&init.assignments) {
        counts[a] += 1;
        for d in 0..dim {
            let diff = p[d] - model.means[a][d];
            model.variances[a][d] += diff * diff;
        }
    }
    for j in 0..k {
        model.weights[j] = (counts[j].max(1)) as f64 / (n + k) as f64;
        for v in &mut model.variances[j] {
            *v = (*v / counts[j].max(1) as f64).max(GMM_VAR_FLOOR);
        }
    }
    let wsum: f64 = model.weights.iter().sum();
    model.weights.iter_mut().for_each(|w| *w /= wsum);

    let mut history = vec![model.log_likelihood(points)];
    let mut resp = vec![vec![0.0; k]; n];
    for _ in 0..GMM_MAX_ITERS {
        if deadline.expired() {
            break;
        }
        // E step
        for (p, r) in points.iter().zip(resp.iter_mut()) {
            let ld = log_densities(p, &model);
            let norm = log_sum_exp(&ld);
            for j in 0..k {
                r[j] = (ld[j] - norm).exp();
            }
        }
        // M step
        for j in 0..k {
            let nk: f64 = resp.iter().map(|r| r[j]).sum();
            model.weights[j] = nk / n as f64;
            if nk < 1e-300 {
                continue;
            }
            for d in 0..dim {
                let mean = resp.iter().zip(points).map(|(r, p)| r[j] * p[d]).sum::<f64>() / nk;
                let var = resp
                    .iter()
                    .zip(points)
                    .map(|(r, p)| r[j] * (p[d] - mean) * (p[d] - mean))
                    .sum::<f64>()
                    / nk;
                model.means[j][d] = mean;
                model.variances[j][d] = var.max(GMM_VAR_FLOOR);
            }
        }
        let ll = model.log_likelihood(points);
        let gain = ll - history.last().copied().unwrap_or(f64::NEG_INFINITY);
        history.push(ll);
        if gain < GMM_TOL {
            break;
        }
    }
    Ok(GmmFit {
        assignments: model.assign(points),
        model,
        loglik_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]]
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        a.iter().zip(b).all(|(x, y)| {
            a.iter().zip(b).all(|(x2, y2)| (x == x2) == (y == y2))
        })
    }

    #[test]
    fn two_blobs_kmeans() {
        for seed in 0..10 {
            let fit = fit_kmeans(&blobs(), 2, seed, 100).unwrap();
            if (fit.sse - 1.0).abs() < 1e-12 {
                assert!(same_partition(&fit.assignments, &[0, 0, 1, 1]));
            }
        }
        let fit = fit_kmeans(&blobs(), 2, 3, 100).unwrap();
        assert!(fit.sse_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn k_one_is_the_mean() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
        let fit = fit_kmeans(&pts, 1, 9, 10).unwrap();
        assert_eq!(fit.centroids, vec![vec![3.0, 3.0]]);
    }

    #[test]
    fn kmeans_is_deterministic_and_validates() {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 7 % 11) as f64, (i % 5) as f64]).collect();
        assert_eq!(fit_kmeans(&pts, 3, 42, 50), fit_kmeans(&pts, 3, 42, 50));
        assert_eq!(
            fit_kmeans(&blobs(), 5, 0, 10).unwrap_err(),
            SolverError::KTooLarge { k: 5, rows: 4 }
        );
    }

    #[test]
    fn ward_matches_kmeans_on_blobs() {
        let (a, _) = fit_agglomerative(&blobs(), 2, &Deadline::never()).unwrap();
        assert!(same_partition(&a, &[0, 0, 1, 1]));
        let (a, _) = fit_agglomerative(&blobs(), 4, &Deadline::never()).unwrap();
        assert_eq!(a, vec![0, 1, 2, 3]);
    }

    #[test]
    fn ward_ties_prefer_smallest_pair() {
        // every adjacent pair is equally close; (0,1) merges first
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let (a, _) = fit_agglomerative(&pts, 2, &Deadline::never()).unwrap();
        assert_eq!(a, vec![0, 0, 1]);
    }

    #[test]
    fn em_loglik_monotone() {
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let f = i as f64;
                vec![(f * 0.37).sin() * 3.0 + if i % 2 == 0 { 5.0 } else { -5.0 }, (f * 1.3).cos()]
            })
            .collect();
        for seed in 0..5 {
            let fit = fit_gmm(&pts, 3, seed, &Deadline::never()).unwrap();
            for w in fit.loglik_history.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{:?}", fit.loglik_history);
            }
        }
        let fit = fit_gmm(&blobs(), 2, 1, &Deadline::never()).unwrap();
        assert!(same_partition(&fit.assignments, &[0, 0, 1, 1]));
    }
}

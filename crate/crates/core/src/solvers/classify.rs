use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::translate::{class_targets, FeatureSpec};
use super::{sq_dist, SolverError};
use crate::sdl::Dataset;
use crate::util::Deadline;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierMethod {
    Knn(usize),
    DecisionTree { max_depth: usize },
    LogisticRegression { iters: usize, lr: f64 },
}

fn argmax_lowest(scores: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_classes: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

pub fn fit_knn(x: &[Vec<f64>], y: &[u32], n_classes: usize, k: usize) -> Result<KnnModel, SolverError> {
    if x.is_empty() {
        return Err(SolverError::TooFewRows("knn needs at least one training row".into()));
    }
    if k == 0 {
        return Err(SolverError::Invalid("k must be at least 1".into()));
    }
    Ok(KnnModel {
        k,
        n_classes,
        points: x.to_vec(),
        labels: y.to_vec(),
    })
}

impl KnnModel {
    /// Majority of the `k` nearest training rows; distance ties go to the
    /// earlier row, vote ties to the lower class.
    pub fn predict_one(&self, q: &[f64]) -> u32 {
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (sq_dist(p, q), i))
            .collect();
        let k = self.k.min(d.len());
        d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; self.n_classes.max(1)];
        for &(_, i) in &d[..k] {
            votes[self.labels[i] as usize] += 1.0;
        }
        argmax_lowest(&votes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        class: u32,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict_one(&self, q: &[f64]) -> u32 {
        match self {
            TreeNode::Leaf { class } => *class,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if q[*feature] <= *threshold {
                    left.predict_one(q)
                } else {
                    right.predict_one(q)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

/// Greedy CART with Gini impurity. Thresholds are midpoints between
/// consecutive distinct values; ties go to the lower feature, then the lower
/// threshold. A node splits only if impurity strictly drops.
pub fn fit_tree(
    x: &[Vec<f64>],
    y: &[u32],
    n_classes: usize,
    max_depth: usize,
    deadline: &Deadline,
) -> Result<TreeNode, SolverError> {
    let rows: Vec<usize> = (0..x.len()).collect();
    grow(x, y, n_classes, &rows, max_depth, deadline)
}

fn grow(
    x: &[Vec<f64>],
    y: &[u32],
    n_classes: usize,
    rows: &[usize],
    depth_left: usize,
    deadline: &Deadline,
) -> Result<TreeNode, SolverError> {
    if deadline.expired() {
        return Err(SolverError::Timeout);
    }
    let mut counts = vec![0.0; n_classes];
    for &r in rows {
        counts[y[r] as usize] += 1.0;
    }
    let leaf = TreeNode::Leaf {
        class: argmax_lowest(&counts),
    };
    let total = rows.len() as f64;
    let parent = gini(&counts, total);
    if depth_left == 0 || parent == 0.0 {
        return Ok(leaf);
    }
    let width = x[rows[0]].len();
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..width {
        let mut sorted = rows.to_vec();
        sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left = vec![0.0; n_classes];
        for i in 0..sorted.len() - 1 {
            left[y[sorted[i]] as usize] += 1.0;
            let (v, next) = (x[sorted[i]][f], x[sorted[i + 1]][f]);
            if v == next {
                continue;
            }
            let nl = (i + 1) as f64;
            let right: Vec<f64> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
            let score = (nl * gini(&left, nl) + (total - nl) * gini(&right, total - nl)) / total;
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, f, (v + next) / 2.0));
            }
        }
    }
    match best {
        Some((score, feature, threshold)) if score < parent => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&row| x[row][feature] <= threshold);
            Ok(TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow(x, y, n_classes, &l, depth_left - 1, deadline)?),
                right: Box::new(grow(x, y, n_classes, &r, depth_left - 1, deadline)?),
            })
        }
        _ => Ok(leaf),
    }
}

/// One weight vector per class; the last entry is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<Vec<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn linear(w: &[f64], q: &[f64]) -> f64 {
    w[..q.len()].iter().zip(q).map(|(a, b)| a * b).sum::<f64>() + w[q.len()]
}

/// One-vs-rest logistic regression by full-batch gradient descent from
/// zero weights.
pub fn fit_logistic(
    x: &[Vec<f64>],
    y: &[u32],
    n_classes: usize,
    iters: usize,
    lr: f64,
    deadline: &Deadline,
) -> Result<LogisticModel, SolverError> {
    if x.is_empty() {
        return Err(SolverError::TooFewRows("no training rows".into()));
    }
    let width = x[0].len();
    let n = x.len() as f64;
    let mut weights = vec![vec![0.0; width + 1]; n_classes];
    let mut grad = vec![0.0; width + 1];
    for _ in 0..iters {
        if deadline.expired() {
            break;
        }
        for (c, w) in weights.iter_mut().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (q, &label) in x.iter().zip(y) {
                let target = if label as usize == c { 1.0 } else { 0.0 };
                let err = sigmoid(linear(w, q)) - target;
                for (g, v) in grad.iter_mut().zip(q) {
                    *g += err * v;
                }
                grad[width] += err;
            }
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= lr * g / n;
            }
        }
    }
    Ok(LogisticModel { weights })
}

impl LogisticModel {
    pub fn predict_one(&self, q: &[f64]) -> u32 {
        let scores: Vec<f64> = self.weights.iter().map(|w| linear(w, q)).collect();
        argmax_lowest(&scores)
    }
}

/// Fitted classifier together with its input translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub features: FeatureSpec,
    pub classes: Vec<String>,
    pub model: ClassifierKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn(KnnModel),
    Tree { root: TreeNode },
    Logistic(LogisticModel),
}

impl ClassifierModel {
    pub fn predict_matrix(&self, x: &[Vec<f64>]) -> Vec<u32> {
        x.iter()
            .map(|q| match &self.model {
                ClassifierKind::Knn(m) => m.predict_one(q),
                ClassifierKind::Tree { root } => root.predict_one(q),
                ClassifierKind::Logistic(m) => m.predict_one(q),
            })
            .collect()
    }

    pub fn predict(&self, d: &Dataset, rows: &[usize]) -> Result<Vec<u32>, SolverError> {
        Ok(self.predict_matrix(&self.features.transform(d, rows)?))
    }
}

/// Fits on `rows` of `d` (all rows when `None`), using every other column
/// as a feature.
pub fn fit_classifier(
    d: &Dataset,
    target: &str,
    method: ClassifierMethod,
    rows: Option<&[usize]>,
    deadline: &Deadline,
) -> Result<ClassifierModel, SolverError> {
    let all: Vec<usize> = (0..d.row_count).collect();
    let rows = rows.unwrap_or(&all);
    let (kept, y, classes) = class_targets(d, target, rows)?;
    let features = FeatureSpec::fit(d, &[target.to_string()], &kept);
    let x = features.transform(d, &kept)?;
    let n_classes = classes.len();
    if !matches!(method, ClassifierMethod::Knn(_)) {
        let mut per_class: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &y {
            *per_class.entry(c).or_default() += 1;
        }
        if y.is_empty() || per_class.values().any(|&n| n < 2) {
            return Err(SolverError::TooFewRows(
                "every class needs at least 2 training rows".into(),
            ));
        }
    }
    let model = match method {
        ClassifierMethod::Knn(k) => ClassifierKind::Knn(fit_knn(&x, &y, n_classes, k)?),
        ClassifierMethod::DecisionTree { max_depth } => ClassifierKind::Tree {
            root: fit_tree(&x, &y, n_classes, max_depth, deadline)?,
        },
        ClassifierMethod::LogisticRegression { iters, lr } => {
            ClassifierKind::Logistic(fit_logistic(&x, &y, n_classes, iters, lr, deadline)?)
        }
    };
    Ok(ClassifierModel {
        features,
        classes,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdl::Column;

    #[test]
    fn one_nn_memorizes() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let y: Vec<u32> = (0..20).map(|i| (i % 3) as u32).collect();
        let m = fit_knn(&x, &y, 3, 1).unwrap();
        for (q, &label) in x.iter().zip(&y) {
            assert_eq!(m.predict_one(q), label);
        }
    }

    #[test]
    fn knn_vote_tie_goes_low() {
        let m = fit_knn(&[vec![0.0], vec![1.0]], &[1, 0], 2, 2).unwrap();
        assert_eq!(m.predict_one(&[0.4]), 0);
    }

    #[test]
    fn stump_splits_at_midpoint() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![0, 0, 1, 1];
        let t = fit_tree(&x, &y, 2, 1, &Deadline::never()).unwrap();
        match &t {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!((*feature, *threshold), (0, 1.5));
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(t.predict_one(&[0.5]), 0);
        assert!(x.iter().zip(&y).all(|(q, &c)| t.predict_one(q) == c));
    }

    #[test]
    fn tree_feature_tie_goes_low() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let t = fit_tree(&x, &[0, 1], 2, 3, &Deadline::never()).unwrap();
        assert!(matches!(t, TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn logistic_separates() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let side = if i < 20 { -1.0 } else { 1.0 };
                vec![side * (1.0 + (i % 5) as f64 * 0.3), (i % 7) as f64 * 0.1]
            })
            .collect();
        let y: Vec<u32> = (0..40).map(|i| (i >= 20) as u32).collect();
        let m = fit_logistic(&x, &y, 2, 500, 0.1, &Deadline::never()).unwrap();
        let hits = x.iter().zip(&y).filter(|(q, &c)| m.predict_one(q) == c).count();
        assert!(hits as f64 / 40.0 >= 0.95);
    }

    #[test]
    fn dataset_level_errors() {
        let d = Dataset::new(
            "d",
            vec![Column::real("x", [0.0, 1.0, 2.0]), Column::categorical("y", &["a", "a", "b"])],
        )
        .unwrap();
        let tree = ClassifierMethod::DecisionTree { max_depth: 2 };
        assert!(matches!(
            fit_classifier(&d, "y", tree, None, &Deadline::never()),
            Err(SolverError::TooFewRows(_))
        ));
        assert!(matches!(
            fit_classifier(&d, "x", tree, None, &Deadline::never()),
            Err(SolverError::TargetNotCategorical(_))
        ));
        let m = fit_classifier(&d, "y", ClassifierMethod::Knn(1), None, &Deadline::never()).unwrap();
        assert_eq!(m.predict(&d, &[0, 1, 2]).unwrap(), vec![0, 0, 1]);
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::classify::{fit_classifier, ClassifierMethod};
use super::cluster::{fit_agglomerative, fit_gmm, fit_kmeans_until};
use super::forecast::{fit_ar, ArOrder};
use super::model::{predict, Model};
use super::optimize::{optimize_box_until, parse_bounds};
use super::outlier::{loo_scores, OUTLIER_SIGMA_FLOOR};
use super::regress::{fit_regressor, sample_std, RegressorMethod};
use super::translate::{class_targets, real_targets, Encoding, FeatureSpec};
use super::SolverError;
use crate::sdl::{DataType, Dataset, Value};
use crate::task::{
    accuracy, holdout_split, precision_at_k, rmse, silhouette, smape, MetricId, Split, TaskKind,
    TaskSpec, DEFAULT_SPLIT_RATIO,
};
use crate::util::Deadline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostClass {
    Light,
    Medium,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Builtin,
    Synthesized { recipe: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRequirement {
    None,
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataConstraints {
    pub min_rows: usize,
    pub max_rows: Option<usize>,
    /// Minimum count of Real/Int columns outside the targets.
    pub min_numeric_features: usize,
    pub target: TargetRequirement,
    /// How missing cells are handled.
    pub missing_values: String,
}

impl DataConstraints {
    fn new(min_rows: usize, target: TargetRequirement, missing_values: &str) -> Self {
        DataConstraints {
            min_rows,
            max_rows: None,
            min_numeric_features: 0,
            target,
            missing_values: missing_values.to_string(),
        }
    }

    /// Why `d` and `task` fall outside these constraints, if they do.
    pub fn rejects(&self, d: &Dataset, task: &TaskSpec) -> Option<String> {
        if d.row_count < self.min_rows {
            return Some(format!("needs at least {} rows", self.min_rows));
        }
        if let Some(max) = self.max_rows {
            if d.row_count > max {
                return Some(format!("accepts at most {max} rows"));
            }
        }
        let numeric = d
            .columns
            .iter()
            .filter(|c| c.dtype.is_numeric() && !task.targets.contains(&c.name))
            .count();
        if numeric < self.min_numeric_features {
            return Some(format!("needs {} numeric feature columns", self.min_numeric_features));
        }
        let target = task.first_target().and_then(|t| d.column(t));
        match (self.target, target) {
            (TargetRequirement::None, _) => None,
            (_, None) => Some("needs a target column".into()),
            (TargetRequirement::Categorical, Some(c)) if !matches!(c.dtype, DataType::Categorical(_)) => {
                Some("needs a categorical target".into())
            }
            (TargetRequirement::Numeric, Some(c)) if !c.dtype.is_numeric() => {
                Some("needs a numeric target".into())
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsmDescriptor {
    pub id: String,
    pub kinds: Vec<TaskKind>,
    pub accepts: DataConstraints,
    pub cost_class: CostClass,
    pub provenance: Provenance,
}

impl PsmDescriptor {
    pub fn applies_to(&self, d: &Dataset, task: &TaskSpec) -> bool {
        self.kinds.contains(&task.kind) && self.accepts.rejects(d, task).is_none()
    }
}

/// One budgeted run request.
#[derive(Debug, Clone)]
pub struct Job {
    pub data: Arc<Dataset>,
    pub task: TaskSpec,
    /// Train/test rows; a seeded holdout for supervised kinds, all rows
    /// otherwise. Shared by every PSM on the task so scores compare.
    pub split: Split,
    /// Seed for this PSM's randomized steps.
    pub seed: u64,
    pub deadline: Deadline,
}

impl Job {
    pub fn new(data: Arc<Dataset>, task: TaskSpec, seed: u64, deadline: Deadline) -> Result<Job, SolverError> {
        let split = if task.kind.is_supervised() {
            holdout_split(&data, DEFAULT_SPLIT_RATIO, task.seed)?
        } else {
            Split::full(data.row_count)
        };
        Ok(Job {
            data,
            task,
            split,
            seed,
            deadline,
        })
    }

    pub fn with_seed(&self, seed: u64, deadline: Deadline) -> Job {
        Job {
            seed,
            deadline,
            ..self.clone()
        }
    }

    fn target(&self) -> Result<&str, SolverError> {
        self.task
            .first_target()
            .ok_or_else(|| SolverError::Invalid(format!("{} needs a target", self.task.kind)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub psm_id: String,
    pub model: Model,
    /// Task metric on the holdout rows (supervised kinds) or on all rows.
    pub score: f64,
    pub metrics: BTreeMap<String, f64>,
    pub time_used_ms: u64,
    pub seed: u64,
}

/// Uniform solver contract: a descriptor plus a budgeted, scored run.
pub trait Psm: Send + Sync {
    fn descriptor(&self) -> &PsmDescriptor;
    fn solve(&self, job: &Job) -> Result<Solution, SolverError>;

    fn id(&self) -> &str {
        &self.descriptor().id
    }
}

impl fmt::Debug for dyn Psm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Psm({})", self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    KMeans,
    Agglomerative,
    GmmEm,
    Classifier(ClassifierMethod),
    Regressor(RegressorMethod),
    Ar,
    OutlierLoo,
    OptimizeBox,
}

#[derive(Debug, Clone)]
pub struct BuiltinPsm {
    descriptor: PsmDescriptor,
    method: Method,
}

impl BuiltinPsm {
    pub fn new(id: &str, method: Method, cost_class: CostClass) -> Self {
        let (kind, accepts) = match method {
            Method::KMeans | Method::Agglomerative | Method::GmmEm => {
                let mut c = DataConstraints::new(2, TargetRequirement::None, "mean-imputed");
                c.min_numeric_features = 1;
                if method == Method::Agglomerative {
                    c.max_rows = Some(AGGLOMERATIVE_MAX_ROWS);
                }
                (TaskKind::Cluster, c)
            }
            Method::Classifier(_) => (
                TaskKind::Classify,
                DataConstraints::new(
                    2,
                    TargetRequirement::Categorical,
                    "rows without a target dropped; features mean-imputed",
                ),
            ),
            Method::Regressor(_) => (
                TaskKind::Regress,
                DataConstraints::new(
                    2,
                    TargetRequirement::Numeric,
                    "rows without a target dropped; features mean-imputed",
                ),
            ),
            Method::Ar => (
                TaskKind::Forecast,
                DataConstraints::new(3, TargetRequirement::None, "series must be complete"),
            ),
            Method::OutlierLoo => {
                let mut c = DataConstraints::new(3, TargetRequirement::None, "missing cells score 0");
                c.min_numeric_features = 1;
                (TaskKind::OutlierDetect, c)
            }
            Method::OptimizeBox => (
                TaskKind::Optimize,
                DataConstraints::new(0, TargetRequirement::None, "data unused"),
            ),
        };
        BuiltinPsm {
            descriptor: PsmDescriptor {
                id: id.to_string(),
                kinds: vec![kind],
                accepts,
                cost_class,
                provenance: Provenance::Builtin,
            },
            method,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }
}

const AGGLOMERATIVE_MAX_ROWS: usize = 2000;
const DEFAULT_K: f64 = 3.0;
const DEFAULT_Z: f64 = 3.0;
const DEFAULT_EVALS: f64 = 1000.0;

impl Psm for BuiltinPsm {
    fn descriptor(&self) -> &PsmDescriptor {
        &self.descriptor
    }

    fn solve(&self, job: &Job) -> Result<Solution, SolverError> {
        let start = Instant::now();
        let mut metrics = BTreeMap::new();
        let (model, score) = match self.method {
            Method::KMeans | Method::Agglomerative | Method::GmmEm => {
                solve_cluster(self.method, job, &mut metrics)?
            }
            Method::Classifier(m) => {
                let model = Model::Classifier(fit_classifier(
                    &job.data,
                    job.target()?,
                    m,
                    Some(&job.split.train),
                    &job.deadline,
                )?);
                let acc = holdout_accuracy(job, &model)?;
                metrics.insert("accuracy".into(), acc);
                (model, acc)
            }
            Method::Regressor(m) => {
                let model = Model::Regressor(fit_regressor(
                    &job.data,
                    job.target()?,
                    m,
                    Some(&job.split.train),
                    job.seed,
                    &job.deadline,
                )?);
                let score = holdout_regression(job, &model, &mut metrics)?;
                (model, score)
            }
            Method::Ar => solve_forecast(job, &mut metrics)?,
            Method::OutlierLoo => solve_outlier(job, &mut metrics)?,
            Method::OptimizeBox => {
                let objective = job
                    .task
                    .param_str("objective")
                    .ok_or_else(|| SolverError::Invalid("optimize needs param `objective`".into()))?;
                let bounds = parse_bounds(
                    job.task
                        .param_str("bounds")
                        .ok_or_else(|| SolverError::Invalid("optimize needs param `bounds`".into()))?,
                )?;
                let evals = job.task.param_f64("evals").unwrap_or(DEFAULT_EVALS).max(1.0) as usize;
                let r = optimize_box_until(objective, &bounds, evals, job.seed, &job.deadline)?;
                metrics.insert("objective".into(), r.value);
                metrics.insert("evaluations".into(), r.evaluations as f64);
                let value = r.value;
                (
                    Model::Optimum {
                        objective: objective.to_string(),
                        x: r.x,
                        value,
                    },
                    value,
                )
            }
        };
        if !score.is_finite() {
            return Err(SolverError::Invalid(format!("non-finite score {score}")));
        }
        Ok(Solution {
            psm_id: self.descriptor.id.clone(),
            model,
            score,
            metrics,
            time_used_ms: start.elapsed().as_millis() as u64,
            seed: job.seed,
        })
    }
}

fn numeric_features(d: &Dataset, exclude: &[String]) -> Result<FeatureSpec, SolverError> {
    let columns: Vec<(String, Encoding)> = d
        .columns
        .iter()
        .filter(|c| c.dtype.is_numeric() && !exclude.contains(&c.name))
        .map(|c| {
            let vals: Vec<f64> = c.values.iter().filter_map(Value::as_f64).collect();
            let mean = if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            (c.name.clone(), Encoding::Numeric { mean })
        })
        .collect();
    if columns.is_empty() {
        return Err(SolverError::NoNumericColumns);
    }
    Ok(FeatureSpec { columns })
}

fn solve_cluster(
    method: Method,
    job: &Job,
    metrics: &mut BTreeMap<String, f64>,
) -> Result<(Model, f64), SolverError> {
    let features = numeric_features(&job.data, &job.task.targets)?;
    let rows: Vec<usize> = (0..job.data.row_count).collect();
    let x = features.transform(&job.data, &rows)?;
    let k = job.task.param_f64("k").unwrap_or(DEFAULT_K).max(1.0) as usize;
    let (model, assignments) = match method {
        Method::KMeans => {
            let fit = fit_kmeans_until(&x, k, job.seed, 100, &job.deadline)?;
            metrics.insert("sse".into(), fit.sse);
            (
                Model::KMeans {
                    features,
                    centroids: fit.centroids,
                },
                fit.assignments,
            )
        }
        Method::Agglomerative => {
            let (assignments, centroids) = fit_agglomerative(&x, k, &job.deadline)?;
            (
                Model::Agglomerative {
                    features,
                    centroids,
                },
                assignments,
            )
        }
        _ => {
            let fit = fit_gmm(&x, k, job.seed, &job.deadline)?;
            if let Some(&ll) = fit.loglik_history.last() {
                metrics.insert("log_likelihood".into(), ll);
            }
            (
                Model::Gmm {
                    features,
                    mixture: fit.model,
                },
                fit.assignments,
            )
        }
    };
    let s = silhouette(&x, &assignments)?;
    metrics.insert("silhouette".into(), s);
    Ok((model, s))
}

/// Accuracy of `model` on the test rows that carry a label.
pub(crate) fn holdout_accuracy(job: &Job, model: &Model) -> Result<f64, SolverError> {
    let (kept, truth, _) = class_targets(&job.data, job.target()?, &job.split.test)?;
    let predicted: Vec<u32> = predict(model, &job.data.select_rows(&kept))?
        .into_iter()
        .map(|v| match v {
            Value::Category(c) => c,
            _ => u32::MAX,
        })
        .collect();
    Ok(accuracy(&predicted, &truth)?)
}

/// Records rmse and smape on the labelled test rows; returns the task metric.
pub(crate) fn holdout_regression(
    job: &Job,
    model: &Model,
    metrics: &mut BTreeMap<String, f64>,
) -> Result<f64, SolverError> {
    let (kept, truth) = real_targets(&job.data, job.target()?, &job.split.test)?;
    let predicted: Vec<f64> = predict(model, &job.data.select_rows(&kept))?
        .iter()
        .map(|v| v.as_f64().unwrap_or(f64::NAN))
        .collect();
    record_errors(job.task.metric, &predicted, &truth, metrics)
}

fn record_errors(
    metric: MetricId,
    predicted: &[f64],
    truth: &[f64],
    metrics: &mut BTreeMap<String, f64>,
) -> Result<f64, SolverError> {
    let r = rmse(predicted, truth)?;
    let s = smape(predicted, truth)?;
    metrics.insert("rmse".into(), r);
    metrics.insert("smape".into(), s);
    Ok(if metric == MetricId::Smape { s } else { r })
}

/// The forecast series: the task target, or the only numeric column.
fn series_column(job: &Job) -> Result<String, SolverError> {
    if let Some(t) = job.task.first_target() {
        return Ok(t.to_string());
    }
    let numeric: Vec<&str> = job
        .data
        .columns
        .iter()
        .filter(|c| c.dtype.is_numeric())
        .map(|c| c.name.as_str())
        .collect();
    match numeric.as_slice() {
        [only] => Ok(only.to_string()),
        [] => Err(SolverError::NoNumericColumns),
        _ => Err(SolverError::Invalid(
            "several numeric columns; name the series as the target".into(),
        )),
    }
}

/// Holds out the last 20% of the series, scores one-step predictions
/// there, and returns a model refitted on the whole series.
fn solve_forecast(job: &Job, metrics: &mut BTreeMap<String, f64>) -> Result<(Model, f64), SolverError> {
    let name = series_column(job)?;
    let col = job
        .data
        .column(&name)
        .ok_or_else(|| SolverError::SchemaMismatch(format!("missing column `{name}`")))?;
    if !col.dtype.is_numeric() {
        return Err(SolverError::TargetNotNumeric(name));
    }
    let series: Vec<f64> = col
        .values
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| SolverError::Invalid(format!("`{name}` has missing values"))))
        .collect::<Result<_, _>>()?;
    let order = match job.task.param_f64("p") {
        Some(p) => ArOrder::Fixed(p.max(0.0) as usize),
        None => ArOrder::Auto,
    };
    let n = series.len();
    let n_val = ((DEFAULT_SPLIT_RATIO * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let (train, val) = series.split_at(n.saturating_sub(n_val));
    let holdout = fit_ar(train, order)?;
    let score = record_errors(job.task.metric, &holdout.one_step(val), val, metrics)?;
    let ar = fit_ar(&series, order)?;
    metrics.insert("p".into(), ar.p as f64);
    Ok((Model::Ar { series: name, ar }, score))
}

/// Scores rows by leave-one-out z. With param `truth` naming a Bool column
/// the score is precision@k against it; otherwise the run is unscored (0).
fn solve_outlier(job: &Job, metrics: &mut BTreeMap<String, f64>) -> Result<(Model, f64), SolverError> {
    let truth_col = job.task.param_str("truth");
    let keep: Vec<&str> = job
        .data
        .columns
        .iter()
        .filter(|c| Some(c.name.as_str()) != truth_col)
        .map(|c| c.name.as_str())
        .collect();
    let data = job.data.project(&keep);
    let scores = loo_scores(&data)?;
    let z = job.task.param_f64("z").unwrap_or(DEFAULT_Z);
    metrics.insert("flagged".into(), scores.iter().filter(|&&s| s > z).count() as f64);
    let score = match truth_col {
        Some(name) => {
            let col = job
                .data
                .column(name)
                .ok_or_else(|| SolverError::SchemaMismatch(format!("missing column `{name}`")))?;
            let truth: Vec<bool> = col.values.iter().map(|v| matches!(v, Value::Bool(true))).collect();
            let p = precision_at_k(&scores, &truth)?;
            metrics.insert("precision_at_k".into(), p);
            p
        }
        None => 0.0,
    };
    let mut columns = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for c in data.columns.iter().filter(|c| c.dtype.is_numeric()) {
        let vals: Vec<f64> = c.values.iter().filter_map(Value::as_f64).collect();
        let mean = if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        columns.push(c.name.clone());
        means.push(mean);
        stds.push(sample_std(&vals).max(OUTLIER_SIGMA_FLOOR));
    }
    Ok((Model::Outlier { columns, means, stds }, score))
}

/// The built-in library, in registry order.
pub fn builtin_psms() -> Vec<BuiltinPsm> {
    use CostClass::*;
    vec![
        BuiltinPsm::new("agglomerative", Method::Agglomerative, Heavy),
        BuiltinPsm::new("ar", Method::Ar, Light),
        BuiltinPsm::new("gmm_em", Method::GmmEm, Medium),
        BuiltinPsm::new("kernel_induction", Method::Regressor(RegressorMethod::KernelInduction), Heavy),
        BuiltinPsm::new("kmeans", Method::KMeans, Light),
        BuiltinPsm::new("knn1", Method::Classifier(ClassifierMethod::Knn(1)), Light),
        BuiltinPsm::new("knn3", Method::Classifier(ClassifierMethod::Knn(3)), Light),
        BuiltinPsm::new("linear", Method::Regressor(RegressorMethod::Linear), Light),
        BuiltinPsm::new(
            "logreg",
            Method::Classifier(ClassifierMethod::LogisticRegression { iters: 300, lr: 0.1 }),
            Medium,
        ),
        BuiltinPsm::new("optimize_box", Method::OptimizeBox, Medium),
        BuiltinPsm::new("outlier_loo", Method::OutlierLoo, Light),
        BuiltinPsm::new(
            "tree",
            Method::Classifier(ClassifierMethod::DecisionTree { max_depth: 5 }),
            Medium,
        ),
    ]
}

pub fn builtin_registry() -> Registry {
    let mut r = Registry::default();
    for p in builtin_psms() {
        r.insert(Arc::new(p)).expect("builtin ids are unique");
    }
    r
}

/// PSMs by id.
#[derive(Clone, Default)]
pub struct Registry {
    psms: BTreeMap<String, Arc<dyn Psm>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.psms.keys()).finish()
    }
}

impl Registry {
    pub fn insert(&mut self, psm: Arc<dyn Psm>) -> Result<(), SolverError> {
        let id = psm.id().to_string();
        if self.psms.contains_key(&id) {
            return Err(SolverError::Invalid(format!("PSM `{id}` already registered")));
        }
        let synthesized = matches!(psm.descriptor().provenance, Provenance::Synthesized { .. });
        if synthesized != id.starts_with("syn:") {
            return Err(SolverError::Invalid(format!(
                "PSM `{id}`: only synthesized PSMs carry the `syn:` prefix"
            )));
        }
        self.psms.insert(id, psm);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Arc<dyn Psm>> {
        self.psms.get(id).cloned()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.psms.contains_key(id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.psms.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.psms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Psm>> {
        self.psms.values()
    }

    /// PSMs whose descriptor accepts the task, in id order.
    pub fn applicable(&self, d: &Dataset, task: &TaskSpec) -> Vec<Arc<dyn Psm>> {
        self.psms
            .values()
            .filter(|p| p.descriptor().applies_to(d, task))
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdl::Column;
    use crate::task::Param;

    fn blobs() -> Arc<Dataset> {
        Arc::new(
            Dataset::new(
                "blobs",
                vec![
                    Column::real("a", [0.0, 0.0, 10.0, 10.0, 0.1, 10.1]),
                    Column::real("b", [0.0, 1.0, 0.0, 1.0, 0.5, 0.5]),
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn registry_rules() {
        let r = builtin_registry();
        assert_eq!(r.len(), 12);
        let mut r2 = r.clone();
        assert!(r2.insert(r.get("knn1").unwrap()).is_err());
    }

    #[test]
    fn applicability() {
        let r = builtin_registry();
        let task = TaskSpec::new(TaskKind::Cluster, vec![], 100, 0).with_param("k", Param::Num(2.0));
        let ids: Vec<String> = r.applicable(&blobs(), &task).iter().map(|p| p.id().to_string()).collect();
        assert_eq!(ids, ["agglomerative", "gmm_em", "kmeans"]);
    }

    #[test]
    fn kmeans_psm_scores_silhouette() {
        let task = TaskSpec::new(TaskKind::Cluster, vec![], 1000, 0).with_param("k", Param::Num(2.0));
        let job = Job::new(blobs(), task, 11, Deadline::never()).unwrap();
        let sol = builtin_registry().get("kmeans").unwrap().solve(&job).unwrap();
        assert!(sol.score > 0.8, "{}", sol.score);
        assert_eq!(sol.seed, 11);
        let again = builtin_registry().get("kmeans").unwrap().solve(&job).unwrap();
        assert_eq!(sol.model, again.model);
    }

    #[test]
    fn classifier_psm_on_holdout() {
        let n = 40;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<&str> = (0..n).map(|i| if i < n / 2 { "lo" } else { "hi" }).collect();
        let d = Arc::new(Dataset::new("c", vec![Column::real("x", x), Column::categorical("y", &y)]).unwrap());
        let task = TaskSpec::new(TaskKind::Classify, vec!["y".into()], 1000, 3);
        let job = Job::new(d, task, 0, Deadline::never()).unwrap();
        assert_eq!(job.split.test.len(), 8);
        for id in ["knn1", "knn3", "tree", "logreg"] {
            let sol = builtin_registry().get(id).unwrap().solve(&job).unwrap();
            assert!(sol.score >= 0.85, "{id}: {}", sol.score);
        }
    }

    #[test]
    fn forecast_psm() {
        let d = Arc::new(Dataset::new("s", vec![Column::real("v", (1..=20).map(f64::from))]).unwrap());
        let task = TaskSpec::new(TaskKind::Forecast, vec![], 1000, 0);
        let job = Job::new(d, task, 0, Deadline::never()).unwrap();
        let sol = builtin_registry().get("ar").unwrap().solve(&job).unwrap();
        assert!(sol.score < 1e-6);
    }

    #[test]
    fn outlier_psm_with_truth() {
        let d = Arc::new(
            Dataset::new(
                "o",
                vec![
                    Column::real("x", [1.0, 2.0, 1.0, 2.0, 9.0]),
                    Column::new(
                        "bad",
                        DataType::Bool,
                        [false, false, false, false, true].map(Value::Bool).to_vec(),
                    ),
                ],
            )
            .unwrap(),
        );
        let task = TaskSpec::new(TaskKind::OutlierDetect, vec![], 1000, 0)
            .with_param("truth", Param::Text("bad".into()));
        let job = Job::new(d, task, 0, Deadline::never()).unwrap();
        let sol = builtin_registry().get("outlier_loo").unwrap().solve(&job).unwrap();
        assert_eq!(sol.score, 1.0);
        assert_eq!(sol.metrics["flagged"], 1.0);
    }

    #[test]
    fn optimize_psm() {
        let d = Arc::new(Dataset::new("none", vec![]).unwrap());
        let task = TaskSpec::new(TaskKind::Optimize, vec![], 1000, 0)
            .with_param("objective", Param::Text("(mul (sub x0 1) (sub x0 1))".into()))
            .with_param("bounds", Param::Text("-10:10".into()));
        let job = Job::new(d, task, 4, Deadline::never()).unwrap();
        let sol = builtin_registry().get("optimize_box").unwrap().solve(&job).unwrap();
        assert!(sol.score <= 0.01);
    }
}

//! Task specifications, metrics, success criteria, holdout splits and
//! fingerprints.

mod fingerprint;
mod metric;
mod parse;
mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sdl::{DataType, Dataset, SdlError};

pub use fingerprint::{fingerprint, TaskFingerprint, FINGERPRINT_LEN};
pub use metric::{
    accuracy, evaluate_metric, precision_at_k, rmse, silhouette, smape, MetricInput,
};
pub use parse::{parse_task, serialize_task};
pub use split::{holdout_split, Split, DEFAULT_SPLIT_RATIO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error(transparent)]
    Syntax(#[from] SdlError),
    #[error("invalid task: {0}")]
    Invalid(String),
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("metric `{0}` is undefined for this input")]
    UndefinedMetricForKind(MetricId),
    #[error("too few rows: {0}")]
    TooFewRows(usize),
    #[error("split ratio {0} outside (0, 0.5]")]
    BadRatio(f64),
    #[error("unknown target column `{0}`")]
    UnknownTargetColumn(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Cluster,
    Classify,
    Regress,
    Forecast,
    OutlierDetect,
    Optimize,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::Cluster,
        TaskKind::Classify,
        TaskKind::Regress,
        TaskKind::Forecast,
        TaskKind::OutlierDetect,
        TaskKind::Optimize,
    ];

    pub fn wire_name(self) -> &'static str {
        match self {
            TaskKind::Cluster => "cluster",
            TaskKind::Classify => "classify",
            TaskKind::Regress => "regress",
            TaskKind::Forecast => "forecast",
            TaskKind::OutlierDetect => "outlier_detect",
            TaskKind::Optimize => "optimize",
        }
    }

    /// Metric used when the task does not name one.
    pub fn default_metric(self) -> MetricId {
        match self {
            TaskKind::Cluster => MetricId::Silhouette,
            TaskKind::Classify => MetricId::Accuracy,
            TaskKind::Regress | TaskKind::Forecast => MetricId::Rmse,
            TaskKind::OutlierDetect => MetricId::PrecisionAtK,
            TaskKind::Optimize => MetricId::Objective,
        }
    }

    pub fn allows_metric(self, m: MetricId) -> bool {
        match self {
            TaskKind::Regress | TaskKind::Forecast => {
                matches!(m, MetricId::Rmse | MetricId::Smape)
            }
            k => k.default_metric() == m,
        }
    }

    /// Supervised kinds are scored on a holdout split.
    pub fn is_supervised(self) -> bool {
        matches!(self, TaskKind::Classify | TaskKind::Regress)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.wire_name() == s)
            .ok_or_else(|| TaskError::Invalid(format!("unknown task kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Accuracy,
    Rmse,
    Silhouette,
    Smape,
    PrecisionAtK,
    Objective,
}

impl MetricId {
    pub const ALL: [MetricId; 6] = [
        MetricId::Accuracy,
        MetricId::Rmse,
        MetricId::Silhouette,
        MetricId::Smape,
        MetricId::PrecisionAtK,
        MetricId::Objective,
    ];

    pub fn wire_name(self) -> &'static str {
        match self {
            MetricId::Accuracy => "accuracy",
            MetricId::Rmse => "rmse",
            MetricId::Silhouette => "silhouette",
            MetricId::Smape => "smape",
            MetricId::PrecisionAtK => "precision_at_k",
            MetricId::Objective => "objective",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            MetricId::Accuracy | MetricId::Silhouette | MetricId::PrecisionAtK => {
                Direction::HigherIsBetter
            }
            MetricId::Rmse | MetricId::Smape | MetricId::Objective => Direction::LowerIsBetter,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

impl FromStr for MetricId {
    type Err = TaskError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.wire_name() == s)
            .ok_or_else(|| TaskError::Invalid(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    /// Signed improvement of `candidate` over `reference`; positive is better.
    pub fn improvement(self, candidate: f64, reference: f64) -> f64 {
        match self {
            Direction::HigherIsBetter => candidate - reference,
            Direction::LowerIsBetter => reference - candidate,
        }
    }

    pub fn better(self, a: f64, b: f64) -> bool {
        self.improvement(a, b) > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    pub threshold: Option<f64>,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionStatus {
    Satisfied,
    NotSatisfied,
    Unthresholded,
}

/// Compares a score to the threshold in the metric's direction.
pub fn check_criterion(criterion: &SuccessCriterion, score: f64) -> CriterionStatus {
    match criterion.threshold {
        None => CriterionStatus::Unthresholded,
        Some(t) => {
            let ok = match criterion.direction {
                Direction::HigherIsBetter => score >= t,
                Direction::LowerIsBetter => score <= t,
            };
            if ok {
                CriterionStatus::Satisfied
            } else {
                CriterionStatus::NotSatisfied
            }
        }
    }
}

/// Task parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub targets: Vec<String>,
    pub metric: MetricId,
    pub criterion: SuccessCriterion,
    pub budget_ms: u64,
    pub seed: u64,
    pub params: BTreeMap<String, Param>,
    /// Optional dataset path, used by suite runners.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

impl TaskSpec {
    /// Task with the kind's default metric and no threshold.
    pub fn new(kind: TaskKind, targets: Vec<String>, budget_ms: u64, seed: u64) -> Self {
        let metric = kind.default_metric();
        TaskSpec {
            kind,
            targets,
            metric,
            criterion: SuccessCriterion {
                threshold: None,
                direction: metric.direction(),
            },
            budget_ms,
            seed,
            params: BTreeMap::new(),
            data: None,
        }
    }

    pub fn with_threshold(mut self, t: f64) -> Self {
        self.criterion.threshold = Some(t);
        self
    }

    pub fn with_param(mut self, key: &str, value: Param) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(Param::Num(v)) => Some(*v),
            Some(Param::Text(s)) => s.parse().ok(),
            None => None,
        }
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        match self.params.get(key) {
            Some(Param::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn first_target(&self) -> Option<&str> {
        self.targets.first().map(String::as_str)
    }

    /// Structural checks independent of any dataset.
    pub fn validate(&self) -> Result<(), TaskError> {
        if self.budget_ms < 1 {
            return Err(TaskError::Invalid("budget_ms must be at least 1".into()));
        }
        match self.kind {
            TaskKind::Classify | TaskKind::Regress if self.targets.is_empty() => {
                return Err(TaskError::Invalid(format!(
                    "{} needs at least one target",
                    self.kind
                )))
            }
            TaskKind::Cluster | TaskKind::OutlierDetect if !self.targets.is_empty() => {
                return Err(TaskError::Invalid(format!("{} takes no target", self.kind)))
            }
            _ => {}
        }
        if !self.kind.allows_metric(self.metric) {
            return Err(TaskError::Invalid(format!(
                "metric `{}` does not apply to {}",
                self.metric, self.kind
            )));
        }
        if self.criterion.direction != self.metric.direction() {
            return Err(TaskError::Invalid("criterion direction disagrees with metric".into()));
        }
        if let Some(t) = self.criterion.threshold {
            if !t.is_finite() {
                return Err(TaskError::Invalid("threshold must be finite".into()));
            }
        }
        Ok(())
    }

    /// Checks that the targets exist in `d` with a usable type.
    pub fn validate_for(&self, d: &Dataset) -> Result<(), TaskError> {
        self.validate()?;
        for t in &self.targets {
            let col = d
                .column(t)
                .ok_or_else(|| TaskError::UnknownTargetColumn(t.clone()))?;
            let ok = match self.kind {
                TaskKind::Classify => matches!(col.dtype, DataType::Categorical(_)),
                TaskKind::Regress | TaskKind::Forecast => col.dtype.is_numeric(),
                _ => true,
            };
            if !ok {
                return Err(TaskError::Invalid(format!(
                    "target `{t}` has type {} which does not suit {}",
                    col.dtype, self.kind
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crit(metric: MetricId, threshold: Option<f64>) -> SuccessCriterion {
        SuccessCriterion {
            threshold,
            direction: metric.direction(),
        }
    }

    #[test]
    fn criterion_directions() {
        assert_eq!(
            check_criterion(&crit(MetricId::Accuracy, Some(0.9)), 0.95),
            CriterionStatus::Satisfied
        );
        assert_eq!(
            check_criterion(&crit(MetricId::Rmse, Some(1.0)), 2.0),
            CriterionStatus::NotSatisfied
        );
        assert_eq!(
            check_criterion(&crit(MetricId::Rmse, None), 123.0),
            CriterionStatus::Unthresholded
        );
    }

    #[test]
    fn wire_names_roundtrip() {
        for k in TaskKind::ALL {
            assert_eq!(k.wire_name().parse::<TaskKind>().unwrap(), k);
        }
        for m in MetricId::ALL {
            assert_eq!(m.wire_name().parse::<MetricId>().unwrap(), m);
        }
    }

    #[test]
    fn target_requirements() {
        assert!(TaskSpec::new(TaskKind::Classify, vec![], 10, 0).validate().is_err());
        assert!(TaskSpec::new(TaskKind::Cluster, vec!["y".into()], 10, 0)
            .validate()
            .is_err());
        assert!(TaskSpec::new(TaskKind::Cluster, vec![], 0, 0).validate().is_err());
        assert!(TaskSpec::new(TaskKind::Forecast, vec![], 10, 0).validate().is_ok());
    }
}

//! Baseline solver library and the uniform PSM (problem-solution method)
//! contract that wraps each solver with input translation and scoring.

mod classify;
mod cluster;
mod composite;
mod forecast;
mod model;
mod optimize;
mod outlier;
mod psm;
mod regress;
mod translate;

use thiserror::Error;

use crate::kernel::KernelError;
use crate::task::TaskError;

pub use classify::{
    fit_classifier, fit_knn, fit_logistic, fit_tree, ClassifierMethod, ClassifierModel,
    ClassifierKind, KnnModel, LogisticModel, TreeNode,
};
pub use cluster::{
    fit_agglomerative, fit_cluster_alt, fit_gmm, fit_kmeans, fit_kmeans_until, AltClusterFit, KMEANS_RESTARTS,
    ClusterMethod, GmmFit, GmmModel, KMeansFit,
};
pub use composite::{AdaptedColumn, Adapter, AdaptedPsm, FittedAdapter, VotePsm};
pub use forecast::{fit_ar, forecast_ar, ArModel, ArOrder, AR_CANDIDATES};
pub use model::{predict, Model, ModelArtifact, MODEL_FORMAT_VERSION};
pub use optimize::{optimize_box, optimize_box_until, parse_bounds, OptimumResult};
pub use outlier::{detect_outliers_loo, loo_scores, OUTLIER_SIGMA_FLOOR};
pub use psm::{
    builtin_psms, builtin_registry, BuiltinPsm, CostClass, DataConstraints, Job, Method,
    Provenance, Psm, PsmDescriptor, Registry, Solution, TargetRequirement,
};
pub use regress::{fit_linear, fit_regressor, LinearFit, RegressorKind, RegressorMethod, RegressorModel};
pub use translate::{class_targets, numeric_matrix, real_targets, Encoding, FeatureSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("k = {k} exceeds the {rows} available rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("column `{0}` is not numeric")]
    NonNumericColumn(String),
    #[error("target `{0}` is not categorical")]
    TargetNotCategorical(String),
    #[error("target `{0}` is not numeric")]
    TargetNotNumeric(String),
    #[error("too few rows: {0}")]
    TooFewRows(String),
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("series of length {len} is too short (needs {needed})")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("no numeric columns")]
    NoNumericColumns,
    #[error("objective: {0}")]
    Parse(#[from] KernelError),
    #[error("bounds are empty or invalid: {0}")]
    EmptyBounds(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("deadline reached before a result was available")]
    Timeout,
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("model artifact: {0}")]
    Artifact(String),
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

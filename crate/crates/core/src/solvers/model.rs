use serde::{Deserialize, Serialize};

use super::classify::ClassifierModel;
use super::cluster::GmmModel;
use super::composite::FittedAdapter;
use super::forecast::ArModel;
use super::regress::RegressorModel;
use super::translate::FeatureSpec;
use super::{sq_dist, SolverError};
use crate::sdl::{Dataset, Value};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT_TAG: &str = "omega-model";

/// Fitted artifact of any PSM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    KMeans {
        features: FeatureSpec,
        centroids: Vec<Vec<f64>>,
    },
    Agglomerative {
        features: FeatureSpec,
        centroids: Vec<Vec<f64>>,
    },
    Gmm {
        features: FeatureSpec,
        mixture: GmmModel,
    },
    Classifier(ClassifierModel),
    Regressor(RegressorModel),
    Ar {
        series: String,
        ar: ArModel,
    },
    /// Column statistics; prediction scores rows by their largest z.
    Outlier {
        columns: Vec<String>,
        means: Vec<f64>,
        stds: Vec<f64>,
    },
    Optimum {
        objective: String,
        x: Vec<f64>,
        value: f64,
    },
    Adapted {
        adapter: FittedAdapter,
        inner: Box<Model>,
    },
    /// Majority vote over classifiers; ties go to the lowest class index.
    Vote { members: Vec<Model> },
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::KMeans { .. } => "k_means",
            Model::Agglomerative { .. } => "agglomerative",
            Model::Gmm { .. } => "gmm",
            Model::Classifier(_) => "classifier",
            Model::Regressor(_) => "regressor",
            Model::Ar { .. } => "ar",
            Model::Outlier { .. } => "outlier",
            Model::Optimum { .. } => "optimum",
            Model::Adapted { .. } => "adapted",
            Model::Vote { .. } => "vote",
        }
    }
}

fn nearest(centroids: &[Vec<f64>], q: &[f64]) -> usize {
    let mut best = 0;
    for (j, c) in centroids.iter().enumerate().skip(1) {
        if sq_dist(q, c) < sq_dist(q, &centroids[best]) {
            best = j;
        }
    }
    best
}

fn labels(v: Vec<usize>) -> Vec<Value> {
    v.into_iter().map(|j| Value::Int(j as i64)).collect()
}

/// Deterministic inference on every row of `d`. Clusterings yield `Int`
/// cluster ids, classifiers `Category` indices, regressors `Real`. An AR
/// model yields one-step-ahead predictions along the series column of `d`.
/// An optimum ignores `d` and yields its point.
pub fn predict(model: &Model, d: &Dataset) -> Result<Vec<Value>, SolverError> {
    let rows: Vec<usize> = (0..d.row_count).collect();
    Ok(match model {
        Model::KMeans {
            features,
            centroids,
        }
        | Model::Agglomerative {
            features,
            centroids,
        } => {
            let x = features.transform(d, &rows)?;
            labels(x.iter().map(|q| nearest(centroids, q)).collect())
        }
        Model::Gmm { features, mixture } => labels(mixture.assign(&features.transform(d, &rows)?)),
        Model::Classifier(m) => m
            .predict(d, &rows)?
            .into_iter()
            .map(Value::Category)
            .collect(),
        Model::Regressor(m) => m.predict(d, &rows)?.into_iter().map(Value::Real).collect(),
        Model::Ar { series, ar } => {
            let col = d
                .column(series)
                .ok_or_else(|| SolverError::SchemaMismatch(format!("missing column `{series}`")))?;
            let vals: Vec<f64> = col
                .values
                .iter()
                .map(|v| {
                    v.as_f64().ok_or_else(|| {
                        SolverError::SchemaMismatch(format!("`{series}` must be numeric and complete"))
                    })
                })
                .collect::<Result<_, _>>()?;
            ar.one_step(&vals).into_iter().map(Value::Real).collect()
        }
        Model::Outlier {
            columns,
            means,
            stds,
        } => {
            let x = FeatureSpec {
                columns: columns
                    .iter()
                    .zip(means)
                    .map(|(c, &mean)| (c.clone(), super::Encoding::Numeric { mean }))
                    .collect(),
            }
            .transform(d, &rows)?;
            x.iter()
                .map(|q| {
                    let z = q
                        .iter()
                        .zip(means.iter().zip(stds))
                        .map(|(v, (m, s))| (v - m).abs() / s.max(super::OUTLIER_SIGMA_FLOOR))
                        .fold(0.0, f64::max);
                    Value::Real(z)
                })
                .collect()
        }
        Model::Optimum { x, .. } => x.iter().copied().map(Value::Real).collect(),
        Model::Adapted { adapter, inner } => predict(inner, &adapter.apply(d)?)?,
        Model::Vote { members } => {
            let votes: Vec<Vec<Value>> = members
                .iter()
                .map(|m| predict(m, d))
                .collect::<Result<_, _>>()?;
            (0..d.row_count)
                .map(|r| {
                    let mut tally: std::collections::BTreeMap<u32, usize> = Default::default();
                    for v in &votes {
                        if let Value::Category(c) = v[r] {
                            *tally.entry(c).or_default() += 1;
                        }
                    }
                    // BTreeMap iterates in ascending class order, so the
                    // first maximum is the lowest index.
                    let mut best: Option<(u32, usize)> = None;
                    for (c, n) in tally {
                        if best.is_none_or(|(_, b)| n > b) {
                            best = Some((c, n));
                        }
                    }
                    best.map_or(Value::Missing, |(c, _)| Value::Category(c))
                })
                .collect()
        }
    })
}

/// Versioned, tagged on-disk form of a [`Model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub model: Model,
}

impl ModelArtifact {
    pub fn new(model: Model) -> Self {
        ModelArtifact {
            format: MODEL_FORMAT_TAG.to_string(),
            version: MODEL_FORMAT_VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model artifacts contain only finite data")
    }

    pub fn from_json(text: &str) -> Result<ModelArtifact, SolverError> {
        let a: ModelArtifact =
            serde_json::from_str(text).map_err(|e| SolverError::Artifact(e.to_string()))?;
        if a.format != MODEL_FORMAT_TAG {
            return Err(SolverError::Artifact(format!("unknown format `{}`", a.format)));
        }
        if a.version != MODEL_FORMAT_VERSION {
            return Err(SolverError::Artifact(format!(
                "version {} (expected {MODEL_FORMAT_VERSION})",
                a.version
            )));
        }
        Ok(a)
    }
}

//! PSMs built from other PSMs: an input adapter in front of a base PSM,
//! and a vote over classifiers. Ids carry the `syn:` prefix.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::model::Model;
use super::psm::{holdout_accuracy, CostClass, Job, Provenance, Psm, PsmDescriptor, Solution};
use super::regress::sample_std;
use super::SolverError;
use crate::sdl::{Column, DataType, Dataset, Value};
use crate::task::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adapter {
    /// `(x - mean) / std` with training-row statistics.
    Standardize,
    /// `sign(x) * ln(1 + |x|)`.
    Log1p,
}

impl Adapter {
    pub const ALL: [Adapter; 2] = [Adapter::Standardize, Adapter::Log1p];

    pub fn name(self) -> &'static str {
        match self {
            Adapter::Standardize => "standardize",
            Adapter::Log1p => "log1p",
        }
    }
}

impl fmt::Display for Adapter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Adapter {
    type Err = SolverError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Adapter::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| SolverError::Invalid(format!("unknown adapter `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedColumn {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedAdapter {
    pub adapter: Adapter,
    pub columns: Vec<AdaptedColumn>,
}

impl FittedAdapter {
    /// Fits on `rows` of every Real/Int column not in `exclude`.
    pub fn fit(adapter: Adapter, d: &Dataset, exclude: &[String], rows: &[usize]) -> FittedAdapter {
        let columns = d
            .columns
            .iter()
            .filter(|c| c.dtype.is_numeric() && !exclude.contains(&c.name))
            .map(|c| {
                let vals: Vec<f64> = rows.iter().filter_map(|&r| c.values[r].as_f64()).collect();
                let mean = if vals.is_empty() {
                    0.0
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                let std = sample_std(&vals);
                AdaptedColumn {
                    name: c.name.clone(),
                    mean,
                    std: if std < 1e-12 { 1.0 } else { std },
                }
            })
            .collect();
        FittedAdapter { adapter, columns }
    }

    fn map(&self, col: &AdaptedColumn, x: f64) -> f64 {
        match self.adapter {
            Adapter::Standardize => (x - col.mean) / col.std,
            Adapter::Log1p => x.signum() * x.abs().ln_1p(),
        }
    }

    /// Copy of `d` with the fitted columns transformed to Real.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset, SolverError> {
        let mut out = d.clone();
        for ac in &self.columns {
            let idx = d
                .column_index(&ac.name)
                .ok_or_else(|| SolverError::SchemaMismatch(format!("missing column `{}`", ac.name)))?;
            let col = &d.columns[idx];
            if !col.dtype.is_numeric() {
                return Err(SolverError::SchemaMismatch(format!("column `{}` is not numeric", ac.name)));
            }
            let values = col
                .values
                .iter()
                .map(|v| v.as_f64().map_or(Value::Missing, |x| Value::Real(self.map(ac, x))))
                .collect();
            out.columns[idx] = Column::new(ac.name.clone(), DataType::Real, values).with_labels(col.labels.clone());
        }
        Ok(out)
    }
}

/// Base PSM behind a fitted input adapter. Only classification and
/// regression bases are accepted.
pub struct AdaptedPsm {
    descriptor: PsmDescriptor,
    adapter: Adapter,
    base: Arc<dyn Psm>,
}

impl AdaptedPsm {
    pub fn new(adapter: Adapter, base: Arc<dyn Psm>) -> Result<Self, SolverError> {
        let bd = base.descriptor();
        if bd.kinds.is_empty()
            || !bd
                .kinds
                .iter()
                .all(|k| matches!(k, TaskKind::Classify | TaskKind::Regress))
        {
            return Err(SolverError::Invalid(format!(
                "adapters apply to classification and regression PSMs, not `{}`",
                bd.id
            )));
        }
        let descriptor = PsmDescriptor {
            id: format!("syn:{adapter}+{}", bd.id),
            kinds: bd.kinds.clone(),
            accepts: bd.accepts.clone(),
            cost_class: bd.cost_class,
            provenance: Provenance::Synthesized {
                recipe: format!("adapter {adapter} {}", bd.id),
            },
        };
        Ok(AdaptedPsm {
            descriptor,
            adapter,
            base,
        })
    }
}

impl Psm for AdaptedPsm {
    fn descriptor(&self) -> &PsmDescriptor {
        &self.descriptor
    }

    fn solve(&self, job: &Job) -> Result<Solution, SolverError> {
        let start = Instant::now();
        let fitted = FittedAdapter::fit(self.adapter, &job.data, &job.task.targets, &job.split.train);
        let inner_job = Job {
            data: Arc::new(fitted.apply(&job.data)?),
            ..job.clone()
        };
        let inner = self.base.solve(&inner_job)?;
        Ok(Solution {
            psm_id: self.descriptor.id.clone(),
            model: Model::Adapted {
                adapter: fitted,
                inner: Box::new(inner.model),
            },
            score: inner.score,
            metrics: inner.metrics,
            time_used_ms: start.elapsed().as_millis() as u64,
            seed: job.seed,
        })
    }
}

/// Majority vote of classifier PSMs; ties go to the lowest class index, so
/// with two members a disagreement picks the lower class.
pub struct VotePsm {
    descriptor: PsmDescriptor,
    members: Vec<Arc<dyn Psm>>,
}

impl VotePsm {
    pub fn new(members: Vec<Arc<dyn Psm>>) -> Result<Self, SolverError> {
        if members.len() < 2 {
            return Err(SolverError::Invalid("a vote needs at least two members".into()));
        }
        for m in &members {
            if m.descriptor().kinds != [TaskKind::Classify] {
                return Err(SolverError::Invalid(format!("`{}` is not a classifier", m.id())));
            }
        }
        let ids: Vec<&str> = members.iter().map(|m| m.id()).collect();
        let first = members[0].descriptor();
        let cost_class = members
            .iter()
            .map(|m| m.descriptor().cost_class)
            .max()
            .unwrap_or(CostClass::Light);
        let descriptor = PsmDescriptor {
            id: format!("syn:vote+{}", ids.join("+")),
            kinds: vec![TaskKind::Classify],
            accepts: first.accepts.clone(),
            cost_class,
            provenance: Provenance::Synthesized {
                recipe: format!("vote {}", ids.join(" ")),
            },
        };
        Ok(VotePsm { descriptor, members })
    }
}

impl Psm for VotePsm {
    fn descriptor(&self) -> &PsmDescriptor {
        &self.descriptor
    }

    fn solve(&self, job: &Job) -> Result<Solution, SolverError> {
        let start = Instant::now();
        let mut members = Vec::with_capacity(self.members.len());
        let mut metrics = BTreeMap::new();
        for m in &self.members {
            let sol = m.solve(job)?;
            metrics.insert(format!("{}.accuracy", m.id()), sol.score);
            members.push(sol.model);
        }
        let model = Model::Vote { members };
        let score = holdout_accuracy(job, &model)?;
        metrics.insert("accuracy".into(), score);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::builtin_registry;
    use crate::task::TaskSpec;
    use crate::util::Deadline;

    /// Label depends on `signal`; `noise` is larger by orders of magnitude.
    fn scaled(n: usize) -> Arc<Dataset> {
        let signal: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let noise: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 * 1000.0).collect();
        let y: Vec<&str> = (0..n).map(|i| if i % 2 == 0 { "even" } else { "odd" }).collect();
        Arc::new(
            Dataset::new(
                "scaled",
                vec![
                    Column::real("signal", signal),
                    Column::real("noise", noise),
                    Column::categorical("y", &y),
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn standardize_rescues_knn() {
        let reg = builtin_registry();
        let job = Job::new(
            scaled(100),
            TaskSpec::new(TaskKind::Classify, vec!["y".into()], 1000, 1),
            0,
            Deadline::never(),
        )
        .unwrap();
        let base = reg.get("knn3").unwrap().solve(&job).unwrap().score;
        let adapted = AdaptedPsm::new(Adapter::Standardize, reg.get("knn3").unwrap()).unwrap();
        assert_eq!(adapted.id(), "syn:standardize+knn3");
        let sol = adapted.solve(&job).unwrap();
        assert!(sol.score > base + 0.3, "{base} -> {}", sol.score);
    }

    #[test]
    fn adapters_reject_unsupervised_bases() {
        let reg = builtin_registry();
        assert!(AdaptedPsm::new(Adapter::Log1p, reg.get("kmeans").unwrap()).is_err());
    }

    #[test]
    fn log1p_is_odd_and_monotone() {
        let f = FittedAdapter {
            adapter: Adapter::Log1p,
            columns: vec![],
        };
        let c = AdaptedColumn {
            name: "x".into(),
            mean: 0.0,
            std: 1.0,
        };
        assert_eq!(f.map(&c, 0.0), 0.0);
        assert!((f.map(&c, -3.0) + f.map(&c, 3.0)).abs() < 1e-15);
        assert!(f.map(&c, 2.0) < f.map(&c, 3.0));
    }

    #[test]
    fn vote_of_two() {
        let reg = builtin_registry();
        let v = VotePsm::new(vec![reg.get("knn1").unwrap(), reg.get("tree").unwrap()]).unwrap();
        assert_eq!(v.id(), "syn:vote+knn1+tree");
        let job = Job::new(
            scaled(60),
            TaskSpec::new(TaskKind::Classify, vec!["y".into()], 1000, 2),
            0,
            Deadline::never(),
        )
        .unwrap();
        let sol = v.solve(&job).unwrap();
        assert!((0.0..=1.0).contains(&sol.score));
    }
}

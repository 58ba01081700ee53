//! Higher-order routines: rule-based task decomposition, synthesis of
//! composite PSMs, and the replay-validated improvement pass.

mod synthesis;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::{run_ensemble, EnsembleConfig, EnsembleError, EnsembleReport};
use crate::memory::MemoryStore;
use crate::sdl::Dataset;
use crate::solvers::Registry;
use crate::task::{TaskKind, TaskSpec};

pub use synthesis::{
    improve_pass, load_recipes, register_recipes, save_recipes, synthesize, CandidateReport, ImproveReport,
    RecipeError, SynthesisRecipe, TaskDelta, Verdict, MIN_MEAN_IMPROVEMENT, MIN_REPLAY_TASKS,
    MAX_TASK_REGRESSION, REGISTRY_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Merge {
    /// One model per target.
    TupleOfModels,
    /// One forecaster per series.
    PerSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub task: TaskSpec,
    /// Columns kept for this subtask: everything except the other targets.
    pub columns: Vec<String>,
}

impl Subtask {
    pub fn target(&self) -> &str {
        self.task.first_target().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPlan {
    pub subtasks: Vec<Subtask>,
    pub merge: Merge,
}

/// R1: classification or regression with several targets splits per
/// target. R2: forecasting over several series (the targets, or every
/// numeric column when none are named) splits per series.
pub fn analyze(t: &TaskSpec, d: &Dataset) -> Option<DecompositionPlan> {
    let (split_on, merge): (Vec<String>, Merge) = match t.kind {
        TaskKind::Classify | TaskKind::Regress if t.targets.len() >= 2 => (t.targets.clone(), Merge::TupleOfModels),
        TaskKind::Forecast => {
            let series = if t.targets.is_empty() {
                d.columns
                    .iter()
                    .filter(|c| c.dtype.is_numeric())
                    .map(|c| c.name.clone())
                    .collect()
            } else {
                t.targets.clone()
            };
            if series.len() < 2 {
                return None;
            }
            (series, Merge::PerSeries)
        }
        _ => return None,
    };
    let subtasks = split_on
        .iter()
        .map(|target| {
            let mut task = t.clone();
            task.targets = vec![target.clone()];
            let columns = d
                .columns
                .iter()
                .filter(|c| &c.name == target || !split_on.contains(&c.name))
                .map(|c| c.name.clone())
                .collect();
            Subtask { task, columns }
        })
        .collect();
    Some(DecompositionPlan { subtasks, merge })
}

/// Runs the ensemble on every subtask over its projected data.
pub fn solve_plan(
    plan: &DecompositionPlan,
    d: &Dataset,
    registry: &Registry,
    mem: &MemoryStore,
    cfg: &EnsembleConfig,
) -> Result<Vec<EnsembleReport>, EnsembleError> {
    plan.subtasks
        .iter()
        .map(|s| {
            let cols: Vec<&str> = s.columns.iter().map(String::as_str).collect();
            run_ensemble(Arc::new(d.project(&cols)), &s.task, registry, mem, cfg)
        })
        .collect()
}

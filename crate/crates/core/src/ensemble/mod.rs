//! The ensemble machine: estimates each applicable PSM's chance of success
//! from memory, splits the budget accordingly, runs the candidates in
//! parallel over a few rounds and keeps the best solution.

mod allocate;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{DatasetRef, MemoryRecord, MemoryStore, OutcomeSummary};
use crate::sdl::Dataset;
use crate::solvers::{
    CostClass, DataConstraints, Job, Provenance, Psm, PsmDescriptor, Registry, Solution, SolverError,
    TargetRequirement,
};
use crate::task::{check_criterion, fingerprint, CriterionStatus, TaskError, TaskFingerprint, TaskKind, TaskSpec};
use crate::util::{derive_seed, Deadline};

pub use allocate::{allocate, estimate_success, Allocation};

pub const ENSEMBLE_ID: &str = "ensemble";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("no registered PSM accepts this task")]
    NoCandidatePsm,
    #[error("every PSM failed: {}", .0.join("; "))]
    AllPsmsFailed(Vec<String>),
    #[error("budget of {budget_ms} ms is below the {needed_ms} ms minimum")]
    BudgetTooSmall { budget_ms: u64, needed_ms: u64 },
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub rounds: usize,
    pub t_min_ms: u64,
    pub workers: usize,
    /// Relative distance from the round's best score that still counts as
    /// success when the task has no threshold.
    pub unthresholded_margin: f64,
    pub grace_ms: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            rounds: 2,
            t_min_ms: 50,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            unthresholded_margin: 0.05,
            grace_ms: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub psm_id: String,
    pub round: usize,
    pub slice_ms: u64,
    pub solution: Option<Solution>,
    pub success: bool,
    pub error: Option<String>,
    /// `Satisfied`, `NotSatisfied` or `Unthresholded` for completed runs.
    pub criterion: Option<CriterionStatus>,
}

impl RunOutcome {
    pub fn summary(&self) -> OutcomeSummary {
        OutcomeSummary {
            psm_id: self.psm_id.clone(),
            round: self.round,
            success: self.success,
            score: self.solution.as_ref().map(|s| s.score),
            time_used_ms: self.solution.as_ref().map_or(0, |s| s.time_used_ms),
            error: self.error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub best: Solution,
    /// Sorted by round, then PSM id.
    pub outcomes: Vec<RunOutcome>,
    pub allocations: Vec<Allocation>,
    /// Success estimates from memory before the first round.
    pub estimates: BTreeMap<String, f64>,
    pub fingerprint: TaskFingerprint,
}

impl EnsembleReport {
    /// One long-term record per outcome; failed runs score 0.
    pub fn memory_records(&self, dataset: &DatasetRef, timestamp: i64) -> Vec<MemoryRecord> {
        self.outcomes
            .iter()
            .map(|o| MemoryRecord {
                fingerprint: self.fingerprint.clone(),
                psm_id: o.psm_id.clone(),
                success: o.success,
                score: o.solution.as_ref().map_or(0.0, |s| s.score),
                time_used_ms: o.solution.as_ref().map_or(0, |s| s.time_used_ms),
                timestamp,
                dataset: dataset.clone(),
            })
            .collect()
    }
}

/// True for the ensemble itself and for synthesized wrappers around it.
fn is_ensemble(id: &str) -> bool {
    id == ENSEMBLE_ID
        || id
            .strip_prefix("syn:")
            .is_some_and(|rest| rest.split('+').any(|part| part == ENSEMBLE_ID))
}

pub fn run_ensemble(
    data: Arc<Dataset>,
    task: &TaskSpec,
    registry: &Registry,
    mem: &MemoryStore,
    cfg: &EnsembleConfig,
) -> Result<EnsembleReport, EnsembleError> {
    run_ensemble_until(data, task, registry, mem, cfg, &Deadline::never())
}

/// As [`run_ensemble`], also stopping between rounds once `outer` expires.
pub fn run_ensemble_until(
    data: Arc<Dataset>,
    task: &TaskSpec,
    registry: &Registry,
    mem: &MemoryStore,
    cfg: &EnsembleConfig,
    outer: &Deadline,
) -> Result<EnsembleReport, EnsembleError> {
    task.validate_for(&data)?;
    if cfg.rounds == 0 || cfg.workers == 0 {
        return Err(EnsembleError::Invalid("rounds and workers must be at least 1".into()));
    }
    let candidates: Vec<Arc<dyn Psm>> = registry
        .applicable(&data, task)
        .into_iter()
        .filter(|p| !is_ensemble(p.id()))
        .collect();
    if candidates.is_empty() {
        return Err(EnsembleError::NoCandidatePsm);
    }
    let fp = fingerprint(&data, task)?;
    let base_job = Job::new(data, task.clone(), task.seed, Deadline::never())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| EnsembleError::Invalid(e.to_string()))?;

    let mut evidence: BTreeMap<String, (f64, f64)> = candidates
        .iter()
        .map(|p| (p.id().to_string(), mem.query(&fp, p.id())))
        .collect();
    let estimates: BTreeMap<String, f64> = evidence
        .iter()
        .map(|(id, &(ws, w))| (id.clone(), allocate::beta_mean(ws, w)))
        .collect();
    let direction = task.metric.direction();
    let mut outcomes: Vec<RunOutcome> = Vec::new();
    let mut allocations = Vec::new();

    for round in 0..cfg.rounds {
        if round > 0 && outer.expired() {
            break;
        }
        let round_budget = task.budget_ms / cfg.rounds as u64
            + if round + 1 == cfg.rounds { task.budget_ms % cfg.rounds as u64 } else { 0 };
        let probs: BTreeMap<String, f64> = evidence
            .iter()
            .map(|(id, &(ws, w))| (id.clone(), allocate::beta_mean(ws, w)))
            .collect();
        let mut alloc = match allocate(round_budget, &probs, cfg.t_min_ms) {
            Err(EnsembleError::BudgetTooSmall { .. }) => {
                allocate(round_budget, &probs, round_budget / probs.len() as u64)?
            }
            other => other?,
        };
        alloc.round = round;
        log::debug!("round {round}: slices {:?}", alloc.slices);

        let mut results: Vec<RunOutcome> = pool.install(|| {
            candidates
                .par_iter()
                .map(|psm| run_one(psm.as_ref(), &base_job, task.seed, round, alloc.slices[psm.id()], cfg.grace_ms))
                .collect()
        });
        results.sort_by(|a, b| a.psm_id.cmp(&b.psm_id));

        let round_best = results
            .iter()
            .filter_map(|o| o.solution.as_ref().map(|s| s.score))
            .reduce(|a, b| if direction.better(b, a) { b } else { a });
        let mut satisfied = false;
        for o in &mut results {
            let Some(sol) = &o.solution else { continue };
            let status = check_criterion(&task.criterion, sol.score);
            o.success = match status {
                CriterionStatus::Satisfied => true,
                CriterionStatus::NotSatisfied => false,
                CriterionStatus::Unthresholded => round_best.is_some_and(|best| {
                    // Shortfall from the best in the metric's direction.
                    -direction.improvement(sol.score, best) <= cfg.unthresholded_margin * best.abs()
                }),
            };
            satisfied |= status == CriterionStatus::Satisfied;
            o.criterion = Some(status);
            let e = evidence.get_mut(&o.psm_id).expect("candidate evidence");
            e.0 += if o.success { 1.0 } else { 0.0 };
            e.1 += 1.0;
        }
        for o in results.iter().filter(|o| o.solution.is_none()) {
            evidence.get_mut(&o.psm_id).expect("candidate evidence").1 += 1.0;
        }
        outcomes.extend(results);
        allocations.push(alloc);
        if satisfied {
            break;
        }
    }

    let mut best: Option<&Solution> = None;
    for o in &outcomes {
        if let Some(s) = &o.solution {
            if best.is_none_or(|b| direction.better(s.score, b.score)) {
                best = Some(s);
            }
        }
    }
    let Some(best) = best.cloned() else {
        return Err(EnsembleError::AllPsmsFailed(
            outcomes
                .iter()
                .map(|o| format!("{}: {}", o.psm_id, o.error.as_deref().unwrap_or("failed")))
                .collect(),
        ));
    };
    Ok(EnsembleReport {
        best,
        outcomes,
        allocations,
        estimates,
        fingerprint: fp,
    })
}

fn run_one(psm: &dyn Psm, base: &Job, seed: u64, round: usize, slice_ms: u64, grace_ms: u64) -> RunOutcome {
    let id = psm.id().to_string();
    let job = base.with_seed(
        derive_seed(seed.wrapping_add(round as u64), &id),
        Deadline::after_ms(slice_ms),
    );
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| psm.solve(&job)));
    let elapsed = start.elapsed().as_millis() as u64;
    let (solution, error) = match result {
        Ok(Ok(mut sol)) if elapsed <= slice_ms + grace_ms => {
            sol.time_used_ms = elapsed;
            (Some(sol), None)
        }
        Ok(Ok(_)) => (None, Some(format!("overran its {slice_ms} ms slice ({elapsed} ms)"))),
        Ok(Err(e)) => (None, Some(e.to_string())),
        Err(_) => (None, Some("panicked".to_string())),
    };
    RunOutcome {
        psm_id: id,
        round,
        slice_ms,
        solution,
        success: false,
        error,
        criterion: None,
    }
}

/// The ensemble exposed as a PSM over a fixed registry and memory.
pub struct EnsemblePsm {
    descriptor: PsmDescriptor,
    registry: Registry,
    memory: Arc<MemoryStore>,
    config: EnsembleConfig,
}

impl EnsemblePsm {
    pub fn new(registry: Registry, memory: Arc<MemoryStore>, config: EnsembleConfig) -> Self {
        EnsemblePsm {
            descriptor: PsmDescriptor {
                id: ENSEMBLE_ID.to_string(),
                kinds: TaskKind::ALL.to_vec(),
                accepts: DataConstraints {
                    min_rows: 0,
                    max_rows: None,
                    min_numeric_features: 0,
                    target: TargetRequirement::None,
                    missing_values: "per scheduled PSM".into(),
                },
                cost_class: CostClass::Heavy,
                provenance: Provenance::Builtin,
            },
            registry,
            memory,
            config,
        }
    }
}

impl Psm for EnsemblePsm {
    fn descriptor(&self) -> &PsmDescriptor {
        &self.descriptor
    }

    fn solve(&self, job: &Job) -> Result<Solution, SolverError> {
        let start = Instant::now();
        let mut task = job.task.clone();
        if let Some(rem) = job.deadline.remaining() {
            task.budget_ms = task.budget_ms.min(rem.as_millis() as u64).max(1);
        }
        let report = run_ensemble_until(
            job.data.clone(),
            &task,
            &self.registry,
            &self.memory,
            &self.config,
            &job.deadline,
        )
        .map_err(|e| match e {
            EnsembleError::Solver(s) => s,
            EnsembleError::Task(t) => SolverError::Task(t),
            other => SolverError::Invalid(other.to_string()),
        })?;
        let mut best = report.best;
        best.time_used_ms = start.elapsed().as_millis() as u64;
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdl::Column;
    use crate::solvers::{builtin_registry, Model};
    use crate::task::Param;

    /// Returns a fixed score after an optional delay.
    struct Fixed {
        d: PsmDescriptor,
        score: f64,
        sleep_ms: u64,
    }

    fn fixed(id: &str, score: f64, sleep_ms: u64) -> Arc<dyn Psm> {
        let mut d = builtin_registry().get("optimize_box").unwrap().descriptor().clone();
        d.id = id.into();
        Arc::new(Fixed { d, score, sleep_ms })
    }

    impl Psm for Fixed {
        fn descriptor(&self) -> &PsmDescriptor {
            &self.d
        }
        fn solve(&self, job: &Job) -> Result<Solution, SolverError> {
            std::thread::sleep(std::time::Duration::from_millis(self.sleep_ms));
            if self.score.is_nan() {
                return Err(SolverError::Invalid("always fails".into()));
            }
            Ok(Solution {
                psm_id: self.d.id.clone(),
                model: Model::Optimum {
                    objective: "0".into(),
                    x: vec![],
                    value: self.score,
                },
                score: self.score,
                metrics: BTreeMap::new(),
                time_used_ms: 0,
                seed: job.seed,
            })
        }
    }

    fn opt_task(budget: u64) -> TaskSpec {
        TaskSpec::new(TaskKind::Optimize, vec![], budget, 7)
            .with_param("objective", Param::Text("x0".into()))
            .with_param("bounds", Param::Text("0:1".into()))
    }

    fn empty() -> Arc<Dataset> {
        Arc::new(Dataset::new("e", vec![]).unwrap())
    }

    fn cfg(rounds: usize, t_min: u64) -> EnsembleConfig {
        EnsembleConfig {
            rounds,
            t_min_ms: t_min,
            workers: 4,
            ..EnsembleConfig::default()
        }
    }

    fn registry(psms: Vec<Arc<dyn Psm>>) -> Registry {
        let mut r = Registry::default();
        for p in psms {
            r.insert(p).unwrap();
        }
        r
    }

    #[test]
    fn picks_the_best_score() {
        let r = registry(vec![fixed("a", 3.0, 0), fixed("b", 1.0, 0), fixed("c", 2.0, 0)]);
        let rep = run_ensemble(empty(), &opt_task(300), &r, &MemoryStore::new(), &cfg(2, 10)).unwrap();
        assert_eq!(rep.best.psm_id, "b");
        assert_eq!(rep.outcomes.len(), 6);
        assert_eq!(rep.allocations[0].slices.values().sum::<u64>(), 150);
        let ok: Vec<bool> = rep.outcomes.iter().map(|o| o.success).collect();
        assert_eq!(ok, [false, true, false, false, true, false]);
    }

    #[test]
    fn ties_prefer_lexicographic_id() {
        let r = registry(vec![fixed("b", 1.0, 0), fixed("a", 1.0, 0)]);
        let rep = run_ensemble(empty(), &opt_task(100), &r, &MemoryStore::new(), &cfg(1, 10)).unwrap();
        assert_eq!(rep.best.psm_id, "a");
    }

    #[test]
    fn satisfied_round_ends_early() {
        let r = registry(vec![fixed("a", 0.5, 0)]);
        let task = opt_task(100).with_threshold(1.0);
        let rep = run_ensemble(empty(), &task, &r, &MemoryStore::new(), &cfg(3, 10)).unwrap();
        assert_eq!(rep.allocations.len(), 1);
        assert_eq!(rep.allocations[0].slices["a"], 33);
    }

    #[test]
    fn failures_and_overruns() {
        let r = registry(vec![fixed("bad", f64::NAN, 0), fixed("slow", 1.0, 250)]);
        let err = run_ensemble(empty(), &opt_task(100), &r, &MemoryStore::new(), &cfg(1, 10)).unwrap_err();
        assert!(matches!(err, EnsembleError::AllPsmsFailed(ref v) if v.len() == 2), "{err}");
    }

    #[test]
    fn no_candidates() {
        let r = registry(vec![fixed("a", 1.0, 0)]);
        let task = TaskSpec::new(TaskKind::Cluster, vec![], 100, 0);
        let d = Arc::new(Dataset::new("d", vec![Column::real("x", [1.0, 2.0])]).unwrap());
        assert_eq!(
            run_ensemble(d, &task, &r, &MemoryStore::new(), &cfg(1, 10)).unwrap_err(),
            EnsembleError::NoCandidatePsm
        );
    }

    #[test]
    fn ensemble_never_schedules_itself() {
        let inner = registry(vec![fixed("a", 1.0, 0)]);
        let ens: Arc<dyn Psm> = Arc::new(EnsemblePsm::new(inner.clone(), Arc::new(MemoryStore::new()), cfg(1, 10)));
        let mut outer = inner;
        outer.insert(ens.clone()).unwrap();
        let rep = run_ensemble(empty(), &opt_task(100), &outer, &MemoryStore::new(), &cfg(1, 10)).unwrap();
        assert!(rep.outcomes.iter().all(|o| o.psm_id == "a"));
        assert!(is_ensemble("syn:standardize+ensemble"));
        assert!(!is_ensemble("syn:standardize+knn3"));
        assert_eq!(ens.descriptor().kinds, TaskKind::ALL.to_vec());
        let job = Job::new(empty(), opt_task(100), 0, Deadline::after_ms(1000)).unwrap();
        assert_eq!(ens.solve(&job).unwrap().score, 1.0);
    }

    #[test]
    fn single_candidate_gets_whole_round() {
        let r = registry(vec![fixed("a", 1.0, 0)]);
        let rep = run_ensemble(empty(), &opt_task(1000), &r, &MemoryStore::new(), &cfg(1, 200)).unwrap();
        assert_eq!(rep.allocations[0].slices["a"], 1000);
    }
}

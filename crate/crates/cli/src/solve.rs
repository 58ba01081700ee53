use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use omega_core::cognition::{analyze, Merge};
use omega_core::ensemble::{run_ensemble, EnsembleReport, ENSEMBLE_ID};
use omega_core::memory::{ArchiveEntry, DatasetRef, Home, OutcomeSummary};
use omega_core::solvers::{ModelArtifact, Registry};
use omega_core::task::{check_criterion, CriterionStatus, TaskSpec};
use omega_core::Dataset;
use serde::Serialize;

use crate::{load_registry, lock, read_dataset, read_task, run_improve, runtime, CliError, CliResult, RunConfig, SolveArgs};

pub const REPORT_FILE: &str = "solution.json";

/// Written to `solution.json` for single-target tasks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub psm_id: String,
    pub score: f64,
    pub metrics: BTreeMap<String, f64>,
    pub time_used_ms: u64,
    pub seed: u64,
    /// Model artifact, relative to the report.
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub kind: String,
    pub metric: String,
    pub criterion: CriterionStatus,
    pub outcomes: Vec<OutcomeSummary>,
}

/// Written to `solution.json` when the task was decomposed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub merge: Merge,
    pub parts: Vec<SolutionReport>,
}

fn report_for(task: &TaskSpec, r: &EnsembleReport, model: String, deterministic: bool) -> SolutionReport {
    let zero = |ms: u64| if deterministic { 0 } else { ms };
    SolutionReport {
        psm_id: r.best.psm_id.clone(),
        score: r.best.score,
        metrics: r.best.metrics.clone(),
        time_used_ms: zero(r.best.time_used_ms),
        seed: r.best.seed,
        model,
        target: None,
        kind: task.kind.to_string(),
        metric: task.metric.to_string(),
        criterion: check_criterion(&task.criterion, r.best.score),
        outcomes: r
            .outcomes
            .iter()
            .map(|o| {
                let mut s = o.summary();
                s.time_used_ms = zero(s.time_used_ms);
                s
            })
            .collect(),
    }
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as i64)
}

fn data_path(args: &SolveArgs, task: &TaskSpec) -> CliResult<PathBuf> {
    if let Some(p) = &args.data {
        return Ok(p.clone());
    }
    match &task.data {
        Some(rel) => {
            let base = args.task.parent().unwrap_or(Path::new(""));
            Ok(base.join(rel))
        }
        None => Err(CliError::Usage("solve needs --data or a `data` field in the task".into())),
    }
}

/// Registry restricted to `psm`, or the full one for the ensemble.
fn scoped(registry: &Registry, psm: Option<&str>) -> CliResult<Registry> {
    match psm {
        None | Some(ENSEMBLE_ID) => Ok(registry.clone()),
        Some(id) => {
            let p = registry.get(id).ok_or_else(|| {
                runtime(format!("unknown PSM `{id}` (known: {}, {ENSEMBLE_ID})", registry.ids().join(", ")))
            })?;
            let mut only = Registry::default();
            only.insert(p).map_err(runtime)?;
            Ok(only)
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub(crate) fn solve(cfg: &RunConfig, args: &SolveArgs, out: &mut dyn Write) -> CliResult {
    let task = read_task(&args.task)?;
    let path = data_path(args, &task)?;
    let data = read_dataset(&path)?;
    task.validate_for(&data)
        .map_err(|e| runtime(format!("{}: {e}", args.task.display())))?;

    let home = Home::new(&cfg.home);
    let _guard = lock(&home)?;
    let mut mem = home.load_memory().map_err(runtime)?;
    let mut session = home.load_session().map_err(runtime)?;
    let mut registry = load_registry(&home)?;
    let run_registry = scoped(&registry, args.psm.as_deref())?;
    let ens = cfg.ensemble();
    let timestamp = if args.deterministic { 0 } else { now_ms() };
    let abs = fs::canonicalize(&path).unwrap_or(path.clone());
    let dataset_ref = DatasetRef::of(abs.to_string_lossy(), &data);
    fs::create_dir_all(&cfg.output_dir).map_err(|e| runtime(format!("{}: {e}", cfg.output_dir.display())))?;

    let mut reports = Vec::new();
    let report_text = match analyze(&task, &data) {
        None => {
            let r = run_ensemble(Arc::new(data), &task, &run_registry, &mem, &ens).map_err(runtime)?;
            let model = "model.json".to_string();
            write_file(&cfg.output_dir.join(&model), &ModelArtifact::new(r.best.model.clone()).to_json())?;
            let report = report_for(&task, &r, model, args.deterministic);
            session.insert(ArchiveEntry {
                task: task.clone(),
                dataset: dataset_ref.clone(),
                best: r.best.clone(),
                outcomes: r.outcomes.iter().map(|o| o.summary()).collect(),
            });
            reports.push(r);
            to_json(&report)
        }
        Some(plan) => {
            let mut parts = Vec::new();
            for sub in &plan.subtasks {
                let cols: Vec<&str> = sub.columns.iter().map(String::as_str).collect();
                let projected: Dataset = data.project(&cols);
                let r = run_ensemble(Arc::new(projected), &sub.task, &run_registry, &mem, &ens)
                    .map_err(|e| runtime(format!("subtask `{}`: {e}", sub.target())))?;
                let model = format!("model_{}.json", sub.target());
                write_file(&cfg.output_dir.join(&model), &ModelArtifact::new(r.best.model.clone()).to_json())?;
                let mut part = report_for(&sub.task, &r, model, args.deterministic);
                part.target = Some(sub.target().to_string());
                parts.push(part);
                reports.push(r);
            }
            to_json(&PlanReport { merge: plan.merge, parts })
        }
    };
    let report_path = cfg.output_dir.join(REPORT_FILE);
    write_file(&report_path, &report_text)?;

    let mut recorded = 0;
    for r in &reports {
        for rec in r.memory_records(&dataset_ref, timestamp) {
            mem.record(rec).map_err(runtime)?;
            recorded += 1;
        }
    }
    home.save_memory(&mem).map_err(runtime)?;
    home.save_session(&session).map_err(runtime)?;
    log::info!("recorded {recorded} outcomes");

    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!("best {} score {}\n", r.best.psm_id, r.best.score));
    }
    text.push_str(&format!("report {}\nrecorded {recorded} outcomes\n", report_path.display()));
    out.write_all(text.as_bytes()).map_err(runtime)?;

    if !args.no_improve {
        run_improve(&home, &mut registry, &session, out)?;
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

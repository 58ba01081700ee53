use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{content_hash, ArchiveEntry, MemoryError, SessionArchive};
use crate::sdl::{parse_sdl_file, Dataset};
use crate::solvers::{Adapter, AdaptedPsm, Job, Provenance, Psm, Registry, SolverError, VotePsm};
use crate::task::TaskKind;
use crate::util::{derive_seed, Deadline};

pub const MIN_REPLAY_TASKS: usize = 3;
pub const MIN_MEAN_IMPROVEMENT: f64 = 0.01;
pub const MAX_TASK_REGRESSION: f64 = 0.05;
/// Candidate mean replay time may be at most this multiple of the base.
const TIME_FACTOR: f64 = 2.0;
/// Base times below this are treated as this, so sub-millisecond PSMs do
/// not fail the time gate on timer noise.
const TIME_FLOOR_MS: f64 = 5.0;
pub const REGISTRY_HEADER: &str = "OMEGA-REG v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecipeError {
    #[error("psms.reg line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("recipe `{id}`: {message}")]
    Build { id: String, message: String },
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// A composite PSM described as data.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum SynthesisRecipe {
    Adapter { adapter: Adapter, base: String },
    /// Members in ascending id order.
    Vote { a: String, b: String },
}

impl SynthesisRecipe {
    pub fn vote(x: &str, y: &str) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        SynthesisRecipe::Vote {
            a: a.to_string(),
            b: b.to_string(),
        }
    }

    pub fn id(&self) -> String {
        match self {
            SynthesisRecipe::Adapter { adapter, base } => format!("syn:{adapter}+{base}"),
            SynthesisRecipe::Vote { a, b } => format!("syn:vote+{a}+{b}"),
        }
    }

    fn bases(&self) -> Vec<&str> {
        match self {
            SynthesisRecipe::Adapter { base, .. } => vec![base],
            SynthesisRecipe::Vote { a, b } => vec![a, b],
        }
    }

    /// Builds the PSM from builtin members of `registry`.
    pub fn build(&self, registry: &Registry) -> Result<Arc<dyn Psm>, RecipeError> {
        let err = |message: String| RecipeError::Build {
            id: self.id(),
            message,
        };
        let mut members = Vec::new();
        for id in self.bases() {
            let p = registry.get(id).ok_or_else(|| err(format!("unknown PSM `{id}`")))?;
            if p.descriptor().provenance != Provenance::Builtin || id == crate::ensemble::ENSEMBLE_ID {
                return Err(err(format!("`{id}` cannot be a synthesis base")));
            }
            members.push(p);
        }
        let built: Result<Arc<dyn Psm>, SolverError> = match self {
            SynthesisRecipe::Adapter { adapter, .. } => {
                AdaptedPsm::new(*adapter, members.remove(0)).map(|p| Arc::new(p) as Arc<dyn Psm>)
            }
            SynthesisRecipe::Vote { .. } => VotePsm::new(members).map(|p| Arc::new(p) as Arc<dyn Psm>),
        };
        built.map_err(|e| err(e.to_string()))
    }

    fn to_line(&self) -> String {
        match self {
            SynthesisRecipe::Adapter { adapter, base } => format!("{}\tadapter\t{adapter}\t{base}", self.id()),
            SynthesisRecipe::Vote { a, b } => format!("{}\tvote\t{a}\t{b}", self.id()),
        }
    }

    fn from_line(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        let recipe = match f.as_slice() {
            [_, "adapter", adapter, base] => SynthesisRecipe::Adapter {
                adapter: adapter.parse().map_err(|e: SolverError| e.to_string())?,
                base: base.to_string(),
            },
            [_, "vote", a, b] => SynthesisRecipe::vote(a, b),
            _ => return Err("expected `id<TAB>adapter|vote<TAB>..<TAB>..`".into()),
        };
        if recipe.id() != f[0] {
            return Err(format!("id `{}` does not match recipe `{}`", f[0], recipe.id()));
        }
        Ok(recipe)
    }
}

impl fmt::Display for SynthesisRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// A missing file holds no recipes.
pub fn load_recipes(path: &Path) -> Result<Vec<SynthesisRecipe>, RecipeError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
        Err(e) => return Err(MemoryError::io(path, e).into()),
    };
    let mut lines = text.lines();
    if lines.next() != Some(REGISTRY_HEADER) {
        return Err(RecipeError::Parse {
            line: 1,
            message: format!("expected header `{REGISTRY_HEADER}`"),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| SynthesisRecipe::from_line(l).map_err(|message| RecipeError::Parse { line: i + 2, message }))
        .collect()
}

pub fn save_recipes(path: &Path, recipes: &[SynthesisRecipe]) -> Result<(), RecipeError> {
    let mut text = format!("{REGISTRY_HEADER}\n");
    for r in recipes {
        text.push_str(&r.to_line());
        text.push('\n');
    }
    crate::memory::write_atomic(path, text.as_bytes())?;
    Ok(())
}

/// Adds every recipe not yet present; returns the ids added.
pub fn register_recipes(registry: &mut Registry, recipes: &[SynthesisRecipe]) -> Result<Vec<String>, RecipeError> {
    let mut added = Vec::new();
    for r in recipes {
        if registry.contains(&r.id()) {
            continue;
        }
        let psm = r.build(registry)?;
        registry.insert(psm).map_err(|e| RecipeError::Build {
            id: r.id(),
            message: e.to_string(),
        })?;
        added.push(r.id());
    }
    Ok(added)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDelta {
    /// Index into the archive.
    pub entry: usize,
    pub archived_best: f64,
    pub candidate: f64,
    /// Positive when the candidate beats the archived best.
    pub delta: f64,
    pub candidate_ms: u64,
    pub base_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    AlreadyRegistered,
    TooFewTasks { replayed: usize },
    MeanTooLow { mean: f64 },
    Regression { worst: f64 },
    TooSlow { candidate_ms: f64, base_ms: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub recipe: SynthesisRecipe,
    pub verdict: Verdict,
    pub deltas: Vec<TaskDelta>,
    /// `(entry, reason)` for archived tasks that could not be replayed.
    pub unavailable: Vec<(usize, String)>,
}

impl CandidateReport {
    pub fn mean_delta(&self) -> Option<f64> {
        (!self.deltas.is_empty()).then(|| self.deltas.iter().map(|d| d.delta).sum::<f64>() / self.deltas.len() as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImproveReport {
    pub candidates: Vec<CandidateReport>,
    pub accepted: Vec<String>,
    pub replay_ms: u64,
}

impl ImproveReport {
    pub fn tried(&self) -> usize {
        self.candidates.len()
    }
}

/// Loads an archived dataset, checking it still hashes as recorded.
fn resolve(entry: &ArchiveEntry) -> Result<Arc<Dataset>, String> {
    let d = parse_sdl_file(Path::new(&entry.dataset.path)).map_err(|e| format!("{}: {e}", entry.dataset.path))?;
    if content_hash(&d) != entry.dataset.hash {
        return Err(format!("{}: content hash changed", entry.dataset.path));
    }
    Ok(Arc::new(d))
}

fn candidates(registry: &Registry, archive: &SessionArchive) -> Vec<SynthesisRecipe> {
    let kinds: BTreeSet<TaskKind> = archive.entries.iter().map(|e| e.task.kind).collect();
    let bases: Vec<String> = registry
        .iter()
        .filter(|p| p.descriptor().provenance == Provenance::Builtin && p.id() != crate::ensemble::ENSEMBLE_ID)
        .filter(|p| {
            let k = &p.descriptor().kinds;
            !k.is_empty()
                && k.iter().all(|k| matches!(k, TaskKind::Classify | TaskKind::Regress))
                && k.iter().any(|k| kinds.contains(k))
        })
        .map(|p| p.id().to_string())
        .collect();
    let mut out: Vec<SynthesisRecipe> = Adapter::ALL
        .iter()
        .flat_map(|&adapter| {
            bases.iter().map(move |base| SynthesisRecipe::Adapter {
                adapter,
                base: base.clone(),
            })
        })
        .collect();
    // Top two builtin classifiers by mean archived score.
    let mut scores: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for e in archive.entries.iter().filter(|e| e.task.kind == TaskKind::Classify) {
        for o in &e.outcomes {
            let Some(s) = o.score else { continue };
            let builtin_classifier = registry.get(&o.psm_id).is_some_and(|p| {
                p.descriptor().provenance == Provenance::Builtin && p.descriptor().kinds == [TaskKind::Classify]
            });
            if builtin_classifier {
                let slot = scores.entry(o.psm_id.as_str()).or_default();
                slot.0 += s;
                slot.1 += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, f64)> = scores.into_iter().map(|(id, (s, n))| (id, s / n as f64)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let [(a, _), (b, _), ..] = ranked.as_slice() {
        out.push(SynthesisRecipe::vote(a, b));
    }
    out
}

fn timed_solve(psm: &dyn Psm, job: &Job) -> Result<(f64, u64), SolverError> {
    let start = Instant::now();
    let sol = psm.solve(job)?;
    Ok((sol.score, start.elapsed().as_millis() as u64))
}

/// Builds the candidate set and replays each candidate on the archive.
/// Nothing is registered.
pub fn synthesize(registry: &Registry, archive: &SessionArchive) -> ImproveReport {
    let start = Instant::now();
    let mut datasets: BTreeMap<usize, Result<Arc<Dataset>, String>> = BTreeMap::new();
    let mut report = ImproveReport::default();
    for recipe in candidates(registry, archive) {
        let mut cand = CandidateReport {
            recipe: recipe.clone(),
            verdict: Verdict::AlreadyRegistered,
            deltas: vec![],
            unavailable: vec![],
        };
        if registry.contains(&recipe.id()) {
            report.candidates.push(cand);
            continue;
        }
        let psm = match recipe.build(registry) {
            Ok(p) => p,
            Err(e) => {
                cand.verdict = Verdict::TooFewTasks { replayed: 0 };
                cand.unavailable.push((usize::MAX, e.to_string()));
                report.candidates.push(cand);
                continue;
            }
        };
        let bases: Vec<Arc<dyn Psm>> = recipe.bases().iter().filter_map(|id| registry.get(id)).collect();
        for (i, entry) in archive.entries.iter().enumerate() {
            if !psm.descriptor().kinds.contains(&entry.task.kind) {
                continue;
            }
            let data = match datasets.entry(i).or_insert_with(|| resolve(entry)) {
                Ok(d) => d.clone(),
                Err(reason) => {
                    cand.unavailable.push((i, reason.clone()));
                    continue;
                }
            };
            if !psm.descriptor().applies_to(&data, &entry.task) {
                continue;
            }
            let job = match Job::new(
                data,
                entry.task.clone(),
                derive_seed(entry.task.seed, psm.id()),
                Deadline::after_ms(entry.task.budget_ms),
            ) {
                Ok(j) => j,
                Err(e) => {
                    cand.unavailable.push((i, e.to_string()));
                    continue;
                }
            };
            let (score, candidate_ms) = match timed_solve(psm.as_ref(), &job) {
                Ok(r) => r,
                Err(e) => {
                    cand.unavailable.push((i, e.to_string()));
                    continue;
                }
            };
            let mut base_ms = 0;
            for b in &bases {
                let bj = job.with_seed(derive_seed(entry.task.seed, b.id()), Deadline::after_ms(entry.task.budget_ms));
                base_ms += timed_solve(b.as_ref(), &bj).map_or(0, |r| r.1);
            }
            let direction = entry.task.metric.direction();
            cand.deltas.push(TaskDelta {
                entry: i,
                archived_best: entry.best.score,
                candidate: score,
                delta: direction.improvement(score, entry.best.score),
                candidate_ms,
                base_ms,
            });
        }
        cand.verdict = judge(&cand.deltas);
        if cand.verdict == Verdict::Accepted {
            report.accepted.push(recipe.id());
        }
        report.candidates.push(cand);
    }
    report.replay_ms = start.elapsed().as_millis() as u64;
    report
}

fn judge(deltas: &[TaskDelta]) -> Verdict {
    if deltas.len() < MIN_REPLAY_TASKS {
        return Verdict::TooFewTasks { replayed: deltas.len() };
    }
    let n = deltas.len() as f64;
    let mean = deltas.iter().map(|d| d.delta).sum::<f64>() / n;
    let worst = deltas.iter().map(|d| d.delta).fold(f64::INFINITY, f64::min);
    if worst < -MAX_TASK_REGRESSION {
        return Verdict::Regression { worst };
    }
    if mean.is_nan() || mean < MIN_MEAN_IMPROVEMENT {
        return Verdict::MeanTooLow { mean };
    }
    let candidate_ms = deltas.iter().map(|d| d.candidate_ms as f64).sum::<f64>() / n;
    let base_ms = deltas.iter().map(|d| d.base_ms as f64).sum::<f64>() / n;
    if candidate_ms > TIME_FACTOR * base_ms.max(TIME_FLOOR_MS) {
        return Verdict::TooSlow { candidate_ms, base_ms };
    }
    Verdict::Accepted
}

/// Synthesizes, registers the accepted recipes and appends them to the
/// recipe file at `registry_path` when one is given.
pub fn improve_pass(
    registry: &mut Registry,
    archive: &SessionArchive,
    registry_path: Option<&Path>,
) -> Result<ImproveReport, RecipeError> {
    let report = synthesize(registry, archive);
    let accepted: Vec<SynthesisRecipe> = report
        .candidates
        .iter()
        .filter(|c| c.verdict == Verdict::Accepted)
        .map(|c| c.recipe.clone())
        .collect();
    for r in &accepted {
        log::info!("accepted synthesized PSM {}", r.id());
    }
    register_recipes(registry, &accepted)?;
    if let Some(path) = registry_path {
        if !accepted.is_empty() {
            let mut all = load_recipes(path)?;
            for r in accepted {
                if !all.contains(&r) {
                    all.push(r);
                }
            }
            save_recipes(path, &all)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::builtin_registry;

    fn delta(d: f64) -> TaskDelta {
        TaskDelta {
            entry: 0,
            archived_best: 0.5,
            candidate: 0.5 + d,
            delta: d,
            candidate_ms: 1,
            base_ms: 1,
        }
    }

    #[test]
    fn acceptance_rule() {
        assert_eq!(judge(&[delta(0.2), delta(0.2)]), Verdict::TooFewTasks { replayed: 2 });
        assert_eq!(judge(&[delta(0.2), delta(0.2), delta(0.0)]), Verdict::Accepted);
        assert_eq!(
            judge(&[delta(0.2), delta(0.2), delta(-0.1)]),
            Verdict::Regression { worst: -0.1 }
        );
        assert!(matches!(judge(&vec![delta(0.005); 3]), Verdict::MeanTooLow { .. }));
        let mut slow = vec![delta(0.1); 3];
        slow[0].candidate_ms = 100;
        assert!(matches!(judge(&slow), Verdict::TooSlow { .. }));
    }

    #[test]
    fn empty_archive_accepts_nothing() {
        let mut reg = builtin_registry();
        let report = improve_pass(&mut reg, &SessionArchive::default(), None).unwrap();
        assert!(report.accepted.is_empty());
        assert_eq!(reg.len(), 12);
    }

    #[test]
    fn recipe_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psms.reg");
        assert!(load_recipes(&path).unwrap().is_empty());
        let recipes = vec![
            SynthesisRecipe::Adapter {
                adapter: Adapter::Standardize,
                base: "knn3".into(),
            },
            SynthesisRecipe::vote("tree", "knn1"),
        ];
        save_recipes(&path, &recipes).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "OMEGA-REG v1\nsyn:standardize+knn3\tadapter\tstandardize\tknn3\nsyn:vote+knn1+tree\tvote\tknn1\ttree\n"
        );
        assert_eq!(load_recipes(&path).unwrap(), recipes);
        let mut reg = builtin_registry();
        assert_eq!(register_recipes(&mut reg, &recipes).unwrap().len(), 2);
        assert_eq!(register_recipes(&mut reg, &recipes).unwrap().len(), 0);
        assert!(reg.contains("syn:vote+knn1+tree"));
    }

    #[test]
    fn bad_recipe_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psms.reg");
        std::fs::write(&path, "nope\n").unwrap();
        assert!(matches!(load_recipes(&path), Err(RecipeError::Parse { line: 1, .. })));
        std::fs::write(&path, "OMEGA-REG v1\nsyn:x\tadapter\tstandardize\tknn3\n").unwrap();
        assert!(matches!(load_recipes(&path), Err(RecipeError::Parse { line: 2, .. })));
        let nested = SynthesisRecipe::Adapter {
            adapter: Adapter::Log1p,
            base: "syn:standardize+knn3".into(),
        };
        let mut reg = builtin_registry();
        register_recipes(
            &mut reg,
            &[SynthesisRecipe::Adapter {
                adapter: Adapter::Standardize,
                base: "knn3".into(),
            }],
        )
        .unwrap();
        assert!(nested.build(&reg).is_err());
    }
}

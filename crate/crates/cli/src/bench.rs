use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use omega_core::ensemble::run_ensemble;
use omega_core::memory::Home;

use crate::{load_registry, read_dataset, read_task, runtime, CliResult, RunConfig};

/// One table row per task file.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BenchRow {
    pub task: String,
    pub kind: String,
    pub metric: String,
    pub result: Result<(String, f64), String>,
}

fn task_files(suite: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(suite).map_err(|e| runtime(format!("{}: {e}", suite.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "task"))
        .collect();
    files.sort();
    Ok(files)
}

/// Data comes from the task's `data` field (relative to the suite), else
/// from the `.sdl` file with the same stem.
fn run_task(path: &Path, cfg: &RunConfig, home: &Home) -> (String, String, Result<(String, f64), String>) {
    let task = match read_task(path) {
        Ok(t) => t,
        Err(e) => return (String::new(), String::new(), Err(e.message().to_string())),
    };
    let kind = task.kind.to_string();
    let metric = task.metric.to_string();
    let result = (|| {
        let data_path = match &task.data {
            Some(rel) => path.parent().unwrap_or(Path::new("")).join(rel),
            None => path.with_extension("sdl"),
        };
        let data = read_dataset(&data_path).map_err(|e| e.message().to_string())?;
        let registry = load_registry(home).map_err(|e| e.message().to_string())?;
        let mem = home.load_memory().map_err(|e| e.to_string())?;
        let r = run_ensemble(Arc::new(data), &task, &registry, &mem, &cfg.ensemble()).map_err(|e| e.to_string())?;
        Ok((r.best.psm_id, r.best.score))
    })();
    (kind, metric, result)
}

pub(crate) fn bench_rows(cfg: &RunConfig, suite: &Path) -> CliResult<Vec<BenchRow>> {
    let home = Home::new(&cfg.home);
    task_files(suite)?
        .iter()
        .map(|path| {
            let (kind, metric, result) = run_task(path, cfg, &home);
            Ok(BenchRow {
                task: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                kind,
                metric,
                result,
            })
        })
        .collect()
}

/// Runs the suite read-only against the home's memory and prints a table.
/// Exits non-zero when any task failed.
pub(crate) fn bench(cfg: &RunConfig, suite: &Path, out: &mut dyn Write) -> CliResult {
    let rows = bench_rows(cfg, suite)?;
    let mut text = format!("{:24} {:15} {:12} {:28} {:>12}\n", "task", "kind", "metric", "best_psm", "score");
    let mut failed = 0;
    for r in &rows {
        match &r.result {
            Ok((psm, score)) => {
                text.push_str(&format!("{:24} {:15} {:12} {:28} {:>12.6}\n", r.task, r.kind, r.metric, psm, score));
            }
            Err(e) => {
                failed += 1;
                text.push_str(&format!("{:24} {:15} {:12} error: {e}\n", r.task, r.kind, r.metric));
            }
        }
    }
    text.push_str(&format!("{} tasks, {} failed\n", rows.len(), failed));
    out.write_all(text.as_bytes()).map_err(runtime)?;
    if failed > 0 {
        return Err(runtime(format!("{failed} of {} tasks failed", rows.len())));
    }
    Ok(())
}

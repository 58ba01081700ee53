use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetRef, MemoryError};
use crate::solvers::Solution;
use crate::task::{serialize_task, TaskSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub psm_id: String,
    pub round: usize,
    pub success: bool,
    pub score: Option<f64>,
    pub time_used_ms: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub task: TaskSpec,
    pub dataset: DatasetRef,
    pub best: Solution,
    pub outcomes: Vec<OutcomeSummary>,
}

/// Mid-term memory: best solution per (task, dataset).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionArchive {
    pub entries: Vec<ArchiveEntry>,
}

impl SessionArchive {
    /// Adds `entry`, replacing any entry for the same task and dataset.
    pub fn insert(&mut self, entry: ArchiveEntry) {
        let key = serialize_task(&entry.task);
        match self
            .entries
            .iter_mut()
            .find(|e| e.dataset == entry.dataset && serialize_task(&e.task) == key)
        {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("archive entries hold finite data")
    }

    /// A missing file loads as an empty archive.
    pub fn load(path: &Path) -> Result<SessionArchive, MemoryError> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| MemoryError::io(path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(SessionArchive::default()),
            Err(e) => Err(MemoryError::io(path, e)),
        }
    }

    /// Atomic replace, as for memory snapshots.
    pub fn save(&self, path: &Path) -> Result<(), MemoryError> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), MemoryError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| MemoryError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| MemoryError::io(dir, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| MemoryError::io(path, e))?;
    tmp.persist(path).map_err(|e| MemoryError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Model;
    use crate::task::TaskKind;
    use std::collections::BTreeMap;

    fn entry(score: f64, path: &str) -> ArchiveEntry {
        ArchiveEntry {
            task: TaskSpec::new(TaskKind::Optimize, vec![], 100, 0),
            dataset: DatasetRef {
                path: path.into(),
                hash: 1,
            },
            best: Solution {
                psm_id: "optimize_box".into(),
                model: Model::Optimum {
                    objective: "x0".into(),
                    x: vec![0.0],
                    value: score,
                },
                score,
                metrics: BTreeMap::new(),
                time_used_ms: 3,
                seed: 0,
            },
            outcomes: vec![],
        }
    }

    #[test]
    fn later_entry_replaces() {
        let mut a = SessionArchive::default();
        a.insert(entry(1.0, "a"));
        a.insert(entry(2.0, "b"));
        a.insert(entry(0.5, "a"));
        assert_eq!(a.len(), 2);
        assert_eq!(a.entries[0].best.score, 0.5);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.snap");
        assert!(SessionArchive::load(&path).unwrap().is_empty());
        let mut a = SessionArchive::default();
        a.insert(entry(1.25, "a"));
        a.save(&path).unwrap();
        assert_eq!(SessionArchive::load(&path).unwrap(), a);
    }
}

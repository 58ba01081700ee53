//! Multi-term memory. The long-term store keeps one record per PSM run and
//! answers similarity-weighted evidence queries; the session archive keeps
//! the best solution per task; `Home` locates both on disk.

mod home;
mod session;
mod snapshot;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sdl::{serialize_sdl, Dataset};
use crate::task::{TaskFingerprint, FINGERPRINT_LEN};
use crate::util::stable_hash;

pub use home::{Home, HomeLock};
pub(crate) use session::write_atomic;
pub use session::{ArchiveEntry, OutcomeSummary, SessionArchive};
pub use snapshot::{snapshot_from_str, snapshot_load, snapshot_to_string, snapshot_write, SNAPSHOT_VERSION};

/// Per-feature divisors applied before the similarity kernel.
pub const FEATURE_SCALES: [f64; FINGERPRINT_LEN] = [3.0, 2.0, 1.0, 1.0, 1.0, 10.0, 1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("invalid record: {0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("corrupt snapshot at line {0}")]
    CorruptSnapshot(usize),
    #[error("snapshot version {found} (this build reads {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("home directory is locked by process {0}")]
    Locked(String),
}

impl MemoryError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        MemoryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Where a dataset came from, for replay.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DatasetRef {
    pub path: String,
    /// FNV-1a 64 of the canonical SDL text.
    pub hash: u64,
}

impl DatasetRef {
    pub fn of(path: impl Into<String>, d: &Dataset) -> Self {
        DatasetRef {
            path: path.into(),
            hash: content_hash(d),
        }
    }
}

pub fn content_hash(d: &Dataset) -> u64 {
    stable_hash(serialize_sdl(d).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub fingerprint: TaskFingerprint,
    pub psm_id: String,
    pub success: bool,
    pub score: f64,
    pub time_used_ms: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
    pub dataset: DatasetRef,
}

impl MemoryRecord {
    pub fn validate(&self) -> Result<(), MemoryError> {
        let bad = |m: &str| Err(MemoryError::Validation(m.to_string()));
        if !self.score.is_finite() {
            return bad("score must be finite");
        }
        if self.fingerprint.features.iter().any(|v| !v.is_finite()) {
            return bad("fingerprint features must be finite");
        }
        if self.psm_id.is_empty() {
            return bad("empty psm id");
        }
        let clean = |s: &str| !s.contains(['\t', '\n', '\r']);
        if !clean(&self.psm_id) || !clean(&self.dataset.path) {
            return bad("psm id and dataset path must not contain tabs or newlines");
        }
        Ok(())
    }
}

/// Gaussian kernel on scaled fingerprints; 0 across task kinds.
pub fn similarity(a: &TaskFingerprint, b: &TaskFingerprint) -> f64 {
    if a.kind != b.kind {
        return 0.0;
    }
    let d2: f64 = a
        .features
        .iter()
        .zip(&b.features)
        .zip(FEATURE_SCALES)
        .map(|((x, y), s)| ((x - y) / s).powi(2))
        .sum();
    (-d2 / 2.0).exp()
}

/// Long-term record log. Append-only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryStore {
    records: Vec<MemoryRecord>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, r: MemoryRecord) -> Result<(), MemoryError> {
        r.validate()?;
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[MemoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Similarity-weighted evidence `(sum w*s, sum w)` for `psm_id`.
    pub fn query(&self, f: &TaskFingerprint, psm_id: &str) -> (f64, f64) {
        self.records
            .iter()
            .filter(|r| r.psm_id == psm_id)
            .fold((0.0, 0.0), |(ws, w), r| {
                let sim = similarity(f, &r.fingerprint);
                (ws + if r.success { sim } else { 0.0 }, w + sim)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TaskKind;

    pub(crate) fn fp(features: [f64; 7]) -> TaskFingerprint {
        TaskFingerprint {
            kind: TaskKind::Classify,
            features,
        }
    }

    pub(crate) fn rec(psm: &str, success: bool, features: [f64; 7]) -> MemoryRecord {
        MemoryRecord {
            fingerprint: fp(features),
            psm_id: psm.into(),
            success,
            score: 0.5,
            time_used_ms: 10,
            timestamp: 1,
            dataset: DatasetRef {
                path: "d.sdl".into(),
                hash: 0xabc,
            },
        }
    }

    #[test]
    fn evidence_from_records() {
        let mut m = MemoryStore::new();
        let f = fp([1.0; 7]);
        assert_eq!(m.query(&f, "a"), (0.0, 0.0));
        m.record(rec("a", true, [1.0; 7])).unwrap();
        assert_eq!(m.query(&f, "a"), (1.0, 1.0));
        m.record(rec("a", false, [1.0; 7])).unwrap();
        assert_eq!(m.query(&f, "a"), (1.0, 2.0));
        assert_eq!(m.query(&f, "b"), (0.0, 0.0));
    }

    #[test]
    fn half_similarity() {
        // One scaled unit of distance d gives exp(-d^2/2) = 0.5 at
        // d = sqrt(2 ln 2); on the first feature that is 3 * d raw.
        let d = (2.0 * 2f64.ln()).sqrt() * 3.0;
        let mut m = MemoryStore::new();
        let mut far = [0.0; 7];
        far[0] = d;
        m.record(rec("a", true, far)).unwrap();
        let (ws, w) = m.query(&fp([0.0; 7]), "a");
        assert!((ws - 0.5).abs() < 1e-12 && (w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kinds_do_not_mix() {
        let mut m = MemoryStore::new();
        m.record(rec("a", true, [0.0; 7])).unwrap();
        let other = TaskFingerprint {
            kind: TaskKind::Regress,
            features: [0.0; 7],
        };
        assert_eq!(m.query(&other, "a"), (0.0, 0.0));
    }

    #[test]
    fn validation() {
        let mut m = MemoryStore::new();
        let mut r = rec("a", true, [0.0; 7]);
        r.score = f64::NAN;
        assert!(matches!(m.record(r), Err(MemoryError::Validation(_))));
        let mut r = rec("a\tb", true, [0.0; 7]);
        assert!(m.record(r.clone()).is_err());
        r.psm_id = "ok".into();
        r.dataset.path = "x\ny".into();
        assert!(m.record(r).is_err());
        assert!(m.is_empty());
    }
}

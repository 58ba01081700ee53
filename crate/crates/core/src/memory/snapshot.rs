//! Text snapshot of the long-term store.
//!
//! ```text
//! OMEGA-MEM v1
//! kind \t f1..f7 \t psm_id \t success \t score \t time_used_ms \t timestamp \t path \t hash
//! ```
//!
//! Reals use the shortest decimal that parses back to the same bits; the
//! hash is 16 lowercase hex digits.

use std::fs;
use std::path::Path;

use super::session::write_atomic;
use super::{DatasetRef, MemoryError, MemoryRecord, MemoryStore};
use crate::task::{TaskFingerprint, TaskKind, FINGERPRINT_LEN};

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &str = "OMEGA-MEM v";
const FIELDS: usize = 1 + FINGERPRINT_LEN + 7;

pub fn snapshot_to_string(mem: &MemoryStore) -> String {
    let mut records: Vec<&MemoryRecord> = mem.records().iter().collect();
    records.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.psm_id.cmp(&b.psm_id)));
    let mut out = format!("{MAGIC}{SNAPSHOT_VERSION}\n");
    for r in records {
        let mut fields: Vec<String> = vec![r.fingerprint.kind.wire_name().to_string()];
        fields.extend(r.fingerprint.features.iter().map(|v| format!("{v:?}")));
        fields.push(r.psm_id.clone());
        fields.push(if r.success { "1" } else { "0" }.into());
        fields.push(format!("{:?}", r.score));
        fields.push(r.time_used_ms.to_string());
        fields.push(r.timestamp.to_string());
        fields.push(r.dataset.path.clone());
        fields.push(format!("{:016x}", r.dataset.hash));
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}

pub fn snapshot_from_str(text: &str) -> Result<MemoryStore, MemoryError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(MemoryError::CorruptSnapshot(1))?;
    let version: u32 = header
        .strip_prefix(MAGIC)
        .and_then(|v| v.parse().ok())
        .ok_or(MemoryError::CorruptSnapshot(1))?;
    if version != SNAPSHOT_VERSION {
        return Err(MemoryError::VersionMismatch {
            found: version,
            expected: SNAPSHOT_VERSION,
        });
    }
    let mut mem = MemoryStore::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let record = parse_record(line).ok_or(MemoryError::CorruptSnapshot(lineno))?;
        mem.record(record).map_err(|_| MemoryError::CorruptSnapshot(lineno))?;
    }
    Ok(mem)
}

fn parse_record(line: &str) -> Option<MemoryRecord> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != FIELDS {
        return None;
    }
    let kind: TaskKind = f[0].parse().ok()?;
    let mut features = [0.0; FINGERPRINT_LEN];
    for (slot, text) in features.iter_mut().zip(&f[1..=FINGERPRINT_LEN]) {
        *slot = text.parse().ok()?;
    }
    let rest = &f[1 + FINGERPRINT_LEN..];
    let success = match rest[1] {
        "1" => true,
        "0" => false,
        _ => return None,
    };
    if rest[6].len() != 16 {
        return None;
    }
    Some(MemoryRecord {
        fingerprint: TaskFingerprint { kind, features },
        psm_id: rest[0].to_string(),
        success,
        score: rest[2].parse().ok()?,
        time_used_ms: rest[3].parse().ok()?,
        timestamp: rest[4].parse().ok()?,
        dataset: DatasetRef {
            path: rest[5].to_string(),
            hash: u64::from_str_radix(rest[6], 16).ok()?,
        },
    })
}

/// Writes to a temporary file in the target directory, then renames it
/// over `path`, so readers see the old or the new file, never a mix.
pub fn snapshot_write(mem: &MemoryStore, path: &Path) -> Result<(), MemoryError> {
    write_atomic(path, snapshot_to_string(mem).as_bytes())
}

/// A missing file loads as an empty store.
pub fn snapshot_load(path: &Path) -> Result<MemoryStore, MemoryError> {
    match fs::read_to_string(path) {
        Ok(text) => snapshot_from_str(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(MemoryStore::new()),
        Err(e) => Err(MemoryError::io(path, e)),
    }
}

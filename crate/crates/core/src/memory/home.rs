use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{snapshot_load, snapshot_write, MemoryError, MemoryStore, SessionArchive};

/// Storage root holding `memory.snap`, `session.snap` and `psms.reg`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Home {
    root: PathBuf,
}

impl Home {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Home { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn memory_path(&self) -> PathBuf {
        self.root.join("memory.snap")
    }

    pub fn session_path(&self) -> PathBuf {
        self.root.join("session.snap")
    }

    pub fn registry_path(&self) -> PathBuf {
        self.root.join("psms.reg")
    }

    pub fn lock_path(&self) -> PathBuf {
        self.root.join("lock")
    }

    pub fn load_memory(&self) -> Result<MemoryStore, MemoryError> {
        snapshot_load(&self.memory_path())
    }

    pub fn save_memory(&self, mem: &MemoryStore) -> Result<(), MemoryError> {
        snapshot_write(mem, &self.memory_path())
    }

    pub fn load_session(&self) -> Result<SessionArchive, MemoryError> {
        SessionArchive::load(&self.session_path())
    }

    pub fn save_session(&self, s: &SessionArchive) -> Result<(), MemoryError> {
        s.save(&self.session_path())
    }

    /// Takes the single-owner lock. A lock left by a process that no longer
    /// exists is replaced.
    pub fn lock(&self) -> Result<HomeLock, MemoryError> {
        fs::create_dir_all(&self.root).map_err(|e| MemoryError::io(&self.root, e))?;
        let path = self.lock_path();
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    write!(f, "{}", std::process::id()).map_err(|e| MemoryError::io(&path, e))?;
                    return Ok(HomeLock { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    let owner = fs::read_to_string(&path).unwrap_or_default();
                    if owner_alive(owner.trim()) {
                        return Err(MemoryError::Locked(owner.trim().to_string()));
                    }
                    let _ = fs::remove_file(&path);
                }
                Err(e) => return Err(MemoryError::io(&path, e)),
            }
        }
        Err(MemoryError::Locked("unknown".into()))
    }
}

fn owner_alive(pid: &str) -> bool {
    let Ok(pid) = pid.parse::<u32>() else {
        return false;
    };
    if cfg!(target_os = "linux") {
        Path::new(&format!("/proc/{pid}")).exists()
    } else {
        true
    }
}

/// Removes the lock file on drop.
#[derive(Debug)]
pub struct HomeLock {
    path: PathBuf,
}

impl Drop for HomeLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let home = Home::new(dir.path());
        let held = home.lock().unwrap();
        assert!(matches!(home.lock(), Err(MemoryError::Locked(_))));
        drop(held);
        assert!(home.lock().is_ok());
    }

    #[test]
    fn stale_lock_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let home = Home::new(dir.path());
        fs::write(home.lock_path(), "not-a-pid").unwrap();
        assert!(home.lock().is_ok());
    }

    #[test]
    fn clearing_session_keeps_long_term() {
        use crate::memory::tests::rec;
        let dir = tempfile::tempdir().unwrap();
        let home = Home::new(dir.path());
        let mut m = MemoryStore::new();
        m.record(rec("a", true, [0.0; 7])).unwrap();
        home.save_memory(&m).unwrap();
        home.save_session(&SessionArchive::default()).unwrap();
        let before = home.load_memory().unwrap().query(&crate::memory::tests::fp([0.0; 7]), "a");
        home.save_session(&SessionArchive::default()).unwrap();
        let after = home.load_memory().unwrap().query(&crate::memory::tests::fp([0.0; 7]), "a");
        assert_eq!(before, after);
    }
}

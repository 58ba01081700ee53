//! Seeds, hashing and cooperative deadlines.

use std::hash::Hasher;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fnv::FnvHasher;

/// Stable 64-bit FNV-1a hash of a byte string.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Per-solver seed: `seed ^ fnv1a(psm_id)`.
pub fn derive_seed(seed: u64, psm_id: &str) -> u64 {
    seed ^ stable_hash(psm_id.as_bytes())
}

/// Cooperative deadline checked by long-running loops at iteration
/// boundaries. An optional shared flag cancels early.
#[derive(Debug, Clone, Default)]
pub struct Deadline {
    at: Option<Instant>,
    cancel: Option<Arc<AtomicBool>>,
}

impl Deadline {
    pub fn never() -> Self {
        Deadline::default()
    }

    pub fn after(d: Duration) -> Self {
        Deadline {
            at: Some(Instant::now() + d),
            cancel: None,
        }
    }

    pub fn after_ms(ms: u64) -> Self {
        Self::after(Duration::from_millis(ms))
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn expired(&self) -> bool {
        if let Some(flag) = &self.cancel {
            if flag.load(Ordering::Relaxed) {
                return true;
            }
        }
        self.at.is_some_and(|t| Instant::now() >= t)
    }

    /// Time left, `None` when unbounded.
    pub fn remaining(&self) -> Option<Duration> {
        self.at.map(|t| t.saturating_duration_since(Instant::now()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(stable_hash(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_hash(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn deadlines() {
        assert!(!Deadline::never().expired());
        assert!(Deadline::after_ms(0).expired());
        let flag = Arc::new(AtomicBool::new(false));
        let d = Deadline::never().with_cancel(flag.clone());
        assert!(!d.expired());
        flag.store(true, Ordering::Relaxed);
        assert!(d.expired());
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EnsembleError;
use crate::memory::MemoryStore;
use crate::task::TaskFingerprint;

/// Posterior mean of a Beta(1, 1) prior updated with similarity-weighted
/// evidence from memory.
pub fn estimate_success(f: &TaskFingerprint, psm_id: &str, mem: &MemoryStore) -> f64 {
    let (ws, w) = mem.query(f, psm_id);
    beta_mean(ws, w)
}

pub(crate) fn beta_mean(ws: f64, w: f64) -> f64 {
    (1.0 + ws) / (2.0 + w)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub slices: BTreeMap<String, u64>,
    pub round: usize,
    pub budget_ms: u64,
}

/// Splits `budget_ms` into per-PSM slices of at least `t_min` each, with
/// the remainder shared in proportion to `probs`. Rounding leftovers go one
/// millisecond at a time to the most probable PSMs (ties by id).
pub fn allocate(budget_ms: u64, probs: &BTreeMap<String, f64>, t_min: u64) -> Result<Allocation, EnsembleError> {
    let n = probs.len() as u64;
    if n == 0 {
        return Err(EnsembleError::NoCandidatePsm);
    }
    if let Some((id, p)) = probs.iter().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
        return Err(EnsembleError::Invalid(format!("probability for `{id}` is {p}")));
    }
    let floor_total = n
        .checked_mul(t_min)
        .filter(|&need| need <= budget_ms)
        .ok_or(EnsembleError::BudgetTooSmall {
            budget_ms,
            needed_ms: n.saturating_mul(t_min),
        })?;
    let flex = budget_ms - floor_total;
    let total: f64 = probs.values().sum();
    let weight = |p: f64| if total > 0.0 { p / total } else { 1.0 / n as f64 };
    let mut slices: BTreeMap<String, u64> = probs
        .iter()
        .map(|(id, &p)| (id.clone(), ((flex as f64 * weight(p)).floor() as u64).min(flex)))
        .collect();
    // Float rounding could overshoot by a unit; trim from the smallest share.
    let mut given: u64 = slices.values().sum();
    let mut order: Vec<(&String, f64)> = probs.iter().map(|(id, &p)| (id, p)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    while given > flex {
        for (id, _) in order.iter().rev() {
            let s = slices.get_mut(*id).expect("same keys");
            if *s > 0 && given > flex {
                *s -= 1;
                given -= 1;
            }
        }
    }
    let mut leftover = flex - given;
    while leftover > 0 {
        for (id, _) in &order {
            if leftover == 0 {
                break;
            }
            *slices.get_mut(*id).expect("same keys") += 1;
            leftover -= 1;
        }
    }
    for s in slices.values_mut() {
        *s += t_min;
    }
    Ok(Allocation {
        slices,
        round: 0,
        budget_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{DatasetRef, MemoryRecord};
    use crate::task::TaskKind;
    use proptest::prelude::*;

    fn probs(v: &[(&str, f64)]) -> BTreeMap<String, f64> {
        v.iter().map(|(k, p)| (k.to_string(), *p)).collect()
    }

    fn slices(a: &Allocation) -> Vec<u64> {
        a.slices.values().copied().collect()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(slices(&allocate(1000, &probs(&[("A", 0.5), ("B", 0.5)]), 0).unwrap()), [500, 500]);
        assert_eq!(slices(&allocate(1000, &probs(&[("A", 0.9), ("B", 0.1)]), 200).unwrap()), [740, 260]);
        let third = 1.0 / 3.0;
        assert_eq!(
            slices(&allocate(1000, &probs(&[("A", third), ("B", third), ("C", third)]), 0).unwrap()),
            [334, 333, 333]
        );
        assert_eq!(slices(&allocate(10, &probs(&[("A", 0.0), ("B", 0.0)]), 1).unwrap()), [5, 5]);
    }

    #[test]
    fn errors() {
        assert_eq!(allocate(10, &BTreeMap::new(), 0), Err(EnsembleError::NoCandidatePsm));
        assert_eq!(
            allocate(100, &probs(&[("A", 0.5), ("B", 0.5)]), 60),
            Err(EnsembleError::BudgetTooSmall {
                budget_ms: 100,
                needed_ms: 120
            })
        );
        assert!(allocate(100, &probs(&[("A", f64::NAN)]), 0).is_err());
    }

    #[test]
    fn estimates() {
        let f = TaskFingerprint {
            kind: TaskKind::Classify,
            features: [1.0; 7],
        };
        let mut mem = MemoryStore::new();
        assert_eq!(estimate_success(&f, "a", &mem), 0.5);
        for success in [true, true, true, false] {
            mem.record(MemoryRecord {
                fingerprint: f.clone(),
                psm_id: "a".into(),
                success,
                score: 1.0,
                time_used_ms: 1,
                timestamp: 0,
                dataset: DatasetRef {
                    path: String::new(),
                    hash: 0,
                },
            })
            .unwrap();
        }
        assert!((estimate_success(&f, "a", &mem) - 4.0 / 6.0).abs() < 1e-12);
        let far = TaskFingerprint {
            kind: TaskKind::Classify,
            features: [100.0; 7],
        };
        assert!((estimate_success(&far, "a", &mem) - 0.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn exact_and_monotone(
            ps in prop::collection::vec(0.0f64..1.0, 1..12),
            budget in 0u64..100_000,
            t_min in 0u64..200,
        ) {
            let map: BTreeMap<String, f64> = ps.iter().enumerate().map(|(i, p)| (format!("p{i:02}"), *p)).collect();
            match allocate(budget, &map, t_min) {
                Ok(a) => {
                    prop_assert_eq!(a.slices.values().sum::<u64>(), budget);
                    for (i, pi) in map.iter() {
                        prop_assert!(a.slices[i] >= t_min);
                        for (j, pj) in map.iter() {
                            if pi > pj {
                                prop_assert!(a.slices[i] >= a.slices[j]);
                            }
                        }
                    }
                }
                Err(e) => prop_assert!(budget < t_min * ps.len() as u64, "{e}"),
            }
        }
    }
}

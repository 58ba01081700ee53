//! Deterministic inputs shared by the benchmarks.

use std::collections::BTreeMap;

use omega_core::{Column, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn probabilities(n: usize, seed: u64) -> BTreeMap<String, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| (format!("psm{i:03}"), rng.gen_range(0.0..1.0))).collect()
}

/// `k` Gaussian-ish blobs in the plane, `n` points in total.
pub fn blobs(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let c = (i % k) as f64 * 5.0;
            vec![c + rng.gen_range(-1.0..1.0), c + rng.gen_range(-1.0..1.0)]
        })
        .collect()
}

/// Mixed-type table with a categorical target `label`.
pub fn table(rows: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..rows).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let y: Vec<f64> = (0..rows).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let label: Vec<&str> = x.iter().zip(&y).map(|(a, b)| if a + b > 0.0 { "pos" } else { "neg" }).collect();
    Dataset::new(
        "bench",
        vec![Column::real("x", x), Column::real("y", y), Column::categorical("label", &label)],
    )
    .expect("valid table")
}

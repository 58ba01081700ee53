use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::sdl::Dataset;

pub const DEFAULT_SPLIT_RATIO: f64 = 0.2;

/// Row partition. Unsupervised tasks use every row for both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn full(n: usize) -> Self {
        Split {
            train: (0..n).collect(),
            test: (0..n).collect(),
        }
    }
}

/// Seeded shuffle of `0..n`; the last `ceil(ratio * n)` indices are the test
/// set.
pub fn holdout_split(d: &Dataset, ratio: f64, seed: u64) -> Result<Split, TaskError> {
    if !(ratio > 0.0 && ratio <= 0.5) {
        return Err(TaskError::BadRatio(ratio));
    }
    let n = d.row_count;
    if n < 2 {
        return Err(TaskError::TooFewRows(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // The epsilon keeps products like 0.1 * 30 from rounding up past 3.
    let n_test = ((ratio * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let test = idx.split_off(n - n_test);
    Ok(Split { train: idx, test })
}

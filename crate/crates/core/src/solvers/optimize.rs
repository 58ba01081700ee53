use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::kernel::{parse_program, KernelError, Program};
use crate::util::Deadline;

/// Share of the evaluation budget spent on uniform random sampling.
const RANDOM_PHASE: f64 = 0.7;
const INITIAL_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Parses `lo:hi` pairs separated by whitespace or commas.
pub fn parse_bounds(text: &str) -> Result<Vec<(f64, f64)>, SolverError> {
    let bad = || SolverError::EmptyBounds(text.to_string());
    let mut out = Vec::new();
    for part in text.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()) {
        let (lo, hi) = part.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        out.push((lo, hi));
    }
    check_bounds(&out)?;
    Ok(out)
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<(), SolverError> {
    if bounds.is_empty() {
        return Err(SolverError::EmptyBounds("no dimensions".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SolverError::EmptyBounds(format!("dimension {i}: {lo}:{hi}")));
        }
    }
    Ok(())
}

pub fn optimize_box(
    objective: &str,
    bounds: &[(f64, f64)],
    budget_evals: usize,
    seed: u64,
) -> Result<OptimumResult, SolverError> {
    optimize_box_until(objective, bounds, budget_evals, seed, &Deadline::never())
}

/// Minimizes `objective` over the box. Evaluation failures count as +inf.
/// Stops early, keeping the incumbent, once `deadline` expires.
pub fn optimize_box_until(
    objective: &str,
    bounds: &[(f64, f64)],
    budget_evals: usize,
    seed: u64,
    deadline: &Deadline,
) -> Result<OptimumResult, SolverError> {
    let program = parse_program(objective)?;
    check_bounds(bounds)?;
    if let Some(v) = program.root().max_var() {
        if v >= bounds.len() {
            return Err(SolverError::Parse(KernelError::Arity {
                needed: v + 1,
                got: bounds.len(),
            }));
        }
    }
    if budget_evals == 0 {
        return Err(SolverError::Invalid("budget_evals must be at least 1".into()));
    }
    let f = |x: &[f64]| score(&program, x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_random = ((RANDOM_PHASE * budget_evals as f64).floor() as usize).max(1);
    let mut best_x: Vec<f64> = Vec::new();
    let mut best_v = f64::INFINITY;
    let mut evals = 0;
    while evals < n_random {
        let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        let v = f(&x);
        evals += 1;
        if best_x.is_empty() || v < best_v {
            best_x = x;
            best_v = v;
        }
        if deadline.expired() {
            break;
        }
    }
    let mut steps: Vec<f64> = bounds.iter().map(|&(lo, hi)| INITIAL_STEP * (hi - lo)).collect();
    'climb: while evals < budget_evals && !deadline.expired() {
        let mut improved = false;
        for dim in 0..bounds.len() {
            for dir in [1.0, -1.0] {
                if evals >= budget_evals {
                    break 'climb;
                }
                let mut cand = best_x.clone();
                cand[dim] = (cand[dim] + dir * steps[dim]).clamp(bounds[dim].0, bounds[dim].1);
                let v = f(&cand);
                evals += 1;
                if v < best_v {
                    best_x = cand;
                    best_v = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
        }
    }
    Ok(OptimumResult {
        x: best_x,
        value: best_v,
        evaluations: evals,
    })
}

fn score(p: &Program, x: &[f64]) -> f64 {
    p.eval(x).unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARABOLA: &str = "(mul (sub x0 1) (sub x0 1))";

    #[test]
    fn finds_parabola_minimum() {
        let r = optimize_box(PARABOLA, &[(-10.0, 10.0)], 1000, 3).unwrap();
        assert!(r.value <= 0.01, "{r:?}");
        assert_eq!(r.evaluations, 1000);
    }

    #[test]
    fn single_evaluation() {
        let r = optimize_box(PARABOLA, &[(-10.0, 10.0)], 1, 9).unwrap();
        assert_eq!(r.evaluations, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: f64 = rng.gen_range(-10.0..10.0);
        assert_eq!(r.x, vec![x]);
        assert_eq!(r.value, (x - 1.0) * (x - 1.0));
    }

    #[test]
    fn bounds_parsing() {
        assert_eq!(parse_bounds("-10:10 0:1").unwrap(), vec![(-10.0, 10.0), (0.0, 1.0)]);
        assert!(parse_bounds("").is_err());
        assert!(parse_bounds("3:1").is_err());
        assert!(optimize_box(PARABOLA, &[], 10, 0).is_err());
        assert!(matches!(
            optimize_box("(add x0", &[(0.0, 1.0)], 10, 0),
            Err(SolverError::Parse(_))
        ));
    }

    #[test]
    fn deterministic() {
        let a = optimize_box("(add (mul x0 x0) (mul x1 x1))", &[(-1.0, 1.0), (-2.0, 2.0)], 300, 5).unwrap();
        let b = optimize_box("(add (mul x0 x0) (mul x1 x1))", &[(-1.0, 1.0), (-2.0, 2.0)], 300, 5).unwrap();
        assert_eq!(a, b);
    }
}

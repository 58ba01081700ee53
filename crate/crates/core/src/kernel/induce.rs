use std::ops::ControlFlow;
use std::time::Instant;

use super::eval::eval_unchecked;
use super::{Enumerator, KernelError, Program};
use crate::util::Deadline;

/// Per-example tolerance for an exact fit.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InduceMode {
    /// Stop at the first program matching every example.
    Exact,
    /// Track the lowest mean squared error until the deadline.
    BestLoss,
}

#[derive(Debug, Clone)]
pub struct InduceOptions {
    pub mode: InduceMode,
    pub deadline: Deadline,
    /// Largest program size to try; unbounded when `None`.
    pub max_size: Option<usize>,
}

impl InduceOptions {
    pub fn new(mode: InduceMode, deadline: Deadline) -> Self {
        InduceOptions {
            mode,
            deadline,
            max_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InductionResult {
    pub best: Option<Program>,
    /// Mean squared error of `best`; infinite when there is none.
    pub loss: f64,
    pub exact: bool,
    pub programs_evaluated: u64,
    pub elapsed_ms: u64,
}

/// Searches programs by increasing size until `deadline_ms` elapses.
pub fn induce(
    examples: &[(Vec<f64>, f64)],
    arity: usize,
    deadline_ms: u64,
    mode: InduceMode,
) -> Result<InductionResult, KernelError> {
    induce_with(
        examples,
        arity,
        &InduceOptions::new(mode, Deadline::after_ms(deadline_ms)),
    )
}

pub fn induce_with(
    examples: &[(Vec<f64>, f64)],
    arity: usize,
    opts: &InduceOptions,
) -> Result<InductionResult, KernelError> {
    if examples.is_empty() {
        return Err(KernelError::NoExamples);
    }
    if examples.iter().any(|(x, _)| x.len() != arity) {
        return Err(KernelError::InconsistentArity);
    }
    let start = Instant::now();
    let mut en = Enumerator::new(arity);
    let mut result = InductionResult {
        best: None,
        loss: f64::INFINITY,
        exact: false,
        programs_evaluated: 0,
        elapsed_ms: 0,
    };
    let n = examples.len() as f64;
    let mut size = 1;
    loop {
        if opts.max_size.is_some_and(|m| size > m) {
            break;
        }
        en.prepare(size);
        let flow = en.visit(size, &mut |e| {
            if opts.deadline.expired() {
                return ControlFlow::Break(());
            }
            result.programs_evaluated += 1;
            let mut sse = 0.0;
            let mut all_close = true;
            for (x, y) in examples {
                match eval_unchecked(e, x) {
                    Ok(v) => {
                        let d = v - y;
                        all_close &= d.abs() <= EXACT_TOLERANCE;
                        sse += d * d;
                    }
                    Err(_) => return ControlFlow::Continue(()),
                }
            }
            let loss = sse / n;
            if all_close {
                result.best = Some(Program::from_arc(e.clone()));
                result.loss = loss;
                result.exact = true;
                return ControlFlow::Break(());
            }
            if opts.mode == InduceMode::BestLoss && loss < result.loss {
                result.best = Some(Program::from_arc(e.clone()));
                result.loss = loss;
            }
            ControlFlow::Continue(())
        });
        if flow.is_break() {
            break;
        }
        size += 1;
    }
    result.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(pairs: &[(f64, f64)]) -> Vec<(Vec<f64>, f64)> {
        pairs.iter().map(|&(x, y)| (vec![x], y)).collect()
    }

    #[test]
    fn successor_is_size_three() {
        let r = induce(&ex(&[(1.0, 2.0), (2.0, 3.0), (5.0, 6.0)]), 1, 5_000, InduceMode::Exact)
            .unwrap();
        assert!(r.exact);
        let p = r.best.unwrap();
        assert_eq!(p.to_string(), "(add x0 1)");
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn identity_is_size_one() {
        let r = induce(&ex(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]), 1, 5_000, InduceMode::Exact)
            .unwrap();
        assert_eq!(r.best.unwrap().to_string(), "x0");
        assert_eq!(r.programs_evaluated, 1);
    }

    #[test]
    fn contradictory_examples_never_fit() {
        let r = induce(&ex(&[(1.0, 2.0), (1.0, 3.0)]), 1, 30, InduceMode::Exact).unwrap();
        assert!(!r.exact);
        assert!(r.best.is_none());
    }

    #[test]
    fn size_three_cap_evaluates_68() {
        let opts = InduceOptions {
            max_size: Some(3),
            ..InduceOptions::new(InduceMode::Exact, Deadline::never())
        };
        let r = induce_with(&ex(&[(1.0, 2.0), (1.0, 3.0)]), 1, &opts).unwrap();
        assert_eq!(r.programs_evaluated, 68);
    }

    #[test]
    fn best_loss_is_anytime() {
        let data = ex(&[(0.0, 0.3), (1.0, 1.7), (2.0, 4.4), (3.0, 9.1), (4.0, 15.8)]);
        let short = induce(&data, 1, 10, InduceMode::BestLoss).unwrap();
        let long = induce(&data, 1, 1000, InduceMode::BestLoss).unwrap();
        assert!(long.loss <= short.loss);
        assert!(long.best.is_some());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(induce(&[], 1, 10, InduceMode::Exact), Err(KernelError::NoExamples));
        assert_eq!(
            induce(&[(vec![1.0, 2.0], 1.0)], 1, 10, InduceMode::Exact),
            Err(KernelError::InconsistentArity)
        );
    }
}

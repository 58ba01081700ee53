use std::ops::ControlFlow;
use std::sync::Arc;

use super::{BinOp, Expr, Program};

/// Tiers with at most this many programs are kept in memory for reuse as
/// subterms; larger tiers are regenerated on the fly.
const CACHE_LIMIT: u128 = 100_000;

/// Number of well-typed programs with exactly `size` nodes.
pub fn tier_count(arity: usize, size: usize) -> u128 {
    let mut counts = vec![0u128; size + 1];
    for s in 1..=size {
        counts[s] = count_at(arity, s, &counts);
    }
    counts[size]
}

fn count_at(arity: usize, s: usize, counts: &[u128]) -> u128 {
    if s == 1 {
        return (arity + Expr::CONSTANTS.len()) as u128;
    }
    let mut total = 0u128;
    if s >= 3 {
        let pairs: u128 = (1..=s - 2)
            .map(|l| counts[l].saturating_mul(counts[s - 1 - l]))
            .fold(0, u128::saturating_add);
        total = total.saturating_add(pairs.saturating_mul(BinOp::ALL.len() as u128));
    }
    if s >= 6 {
        let rest = s - 2;
        for a in 1..=rest - 3 {
            for b in 1..=rest - a - 2 {
                for c in 1..=rest - a - b - 1 {
                    let d = rest - a - b - c;
                    let n = counts[a]
                        .saturating_mul(counts[b])
                        .saturating_mul(counts[c])
                        .saturating_mul(counts[d]);
                    total = total.saturating_add(n);
                }
            }
        }
    }
    total
}

type Visitor<'a> = dyn FnMut(&Arc<Expr>) -> ControlFlow<()> + 'a;
type ArgVisitor<'a> = dyn FnMut(&[Arc<Expr>]) -> ControlFlow<()> + 'a;

/// Size-ordered generator of every well-typed program over `arity`
/// variables.
///
/// Within one size the order is: variables `x0..`, constants 0, 1, 2, then
/// `add`, `sub`, `mul`, `div`, `ite`; arguments vary left to right, the
/// leftmost argument slowest, each argument ordered by size first.
pub struct Enumerator {
    arity: usize,
    tiers: Vec<Option<Vec<Arc<Expr>>>>,
}

impl Enumerator {
    pub fn new(arity: usize) -> Self {
        Enumerator {
            arity,
            tiers: vec![None],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Fills the subterm cache for every size up to `size`.
    pub fn prepare(&mut self, size: usize) {
        while self.tiers.len() <= size {
            let s = self.tiers.len();
            let tier = if tier_count(self.arity, s) <= CACHE_LIMIT {
                let mut v = Vec::new();
                let _ = self.generate(s, &mut |e| {
                    v.push(e.clone());
                    ControlFlow::Continue(())
                });
                Some(v)
            } else {
                None
            };
            self.tiers.push(tier);
        }
    }

    /// Calls `f` on every program of exactly `size` nodes, in order, until
    /// it breaks. Call [`Enumerator::prepare`] first for speed.
    pub fn visit(&self, size: usize, f: &mut Visitor<'_>) -> ControlFlow<()> {
        if size == 0 {
            return ControlFlow::Continue(());
        }
        if let Some(Some(tier)) = self.tiers.get(size) {
            for e in tier {
                f(e)?;
            }
            return ControlFlow::Continue(());
        }
        self.generate(size, f)
    }

    fn generate(&self, size: usize, f: &mut Visitor<'_>) -> ControlFlow<()> {
        if size == 1 {
            for i in 0..self.arity {
                f(&Arc::new(Expr::Var(i)))?;
            }
            for c in Expr::CONSTANTS {
                f(&Arc::new(Expr::Const(c)))?;
            }
            return ControlFlow::Continue(());
        }
        if size >= 3 {
            for op in BinOp::ALL {
                let mut stack = Vec::with_capacity(2);
                self.visit_args(2, size - 1, &mut stack, &mut |args| {
                    f(&Arc::new(Expr::Binary(op, args[0].clone(), args[1].clone())))
                })?;
            }
        }
        if size >= 6 {
            let mut stack = Vec::with_capacity(4);
            self.visit_args(4, size - 2, &mut stack, &mut |args| {
                f(&Arc::new(Expr::Ite {
                    lhs: args[0].clone(),
                    rhs: args[1].clone(),
                    then: args[2].clone(),
                    els: args[3].clone(),
                }))
            })?;
        }
        ControlFlow::Continue(())
    }

    /// Every sequence of `slots` programs whose sizes sum to `budget`.
    fn visit_args(
        &self,
        slots: usize,
        budget: usize,
        stack: &mut Vec<Arc<Expr>>,
        f: &mut ArgVisitor<'_>,
    ) -> ControlFlow<()> {
        if slots == 1 {
            return self.visit(budget, &mut |e| {
                stack.push(e.clone());
                let r = f(stack);
                stack.pop();
                r
            });
        }
        if budget < slots {
            return ControlFlow::Continue(());
        }
        for s in 1..=budget - (slots - 1) {
            self.visit(s, &mut |e| {
                stack.push(e.clone());
                let r = self.visit_args(slots - 1, budget - s, stack, f);
                stack.pop();
                r
            })?;
        }
        ControlFlow::Continue(())
    }
}

/// All programs with at most `max_size` nodes, in non-decreasing size.
/// Each size tier is materialized when reached.
pub fn enumerate_programs(arity: usize, max_size: usize) -> impl Iterator<Item = Program> {
    let mut en = Enumerator::new(arity);
    en.prepare(max_size.min(8));
    (1..=max_size).flat_map(move |size| {
        let mut tier = Vec::new();
        let _ = en.visit(size, &mut |e| {
            tier.push(Program::from_arc(e.clone()));
            ControlFlow::Continue(())
        });
        tier
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminals_first() {
        let progs: Vec<String> = enumerate_programs(1, 1).map(|p| p.to_string()).collect();
        assert_eq!(progs, vec!["x0", "0", "1", "2"]);
    }

    #[test]
    fn size_three_tier() {
        let progs: Vec<Program> = enumerate_programs(1, 3).collect();
        assert_eq!(progs.len(), 68);
        assert_eq!(progs[4].to_string(), "(add x0 x0)");
        assert!(progs.windows(2).all(|w| w[0].len() <= w[1].len()));
    }

    #[test]
    fn counts_match_generation() {
        for arity in 1..=2 {
            let mut en = Enumerator::new(arity);
            en.prepare(7);
            for size in 1..=7 {
                let mut n = 0u128;
                let _ = en.visit(size, &mut |_| {
                    n += 1;
                    ControlFlow::Continue(())
                });
                assert_eq!(n, tier_count(arity, size), "arity {arity} size {size}");
            }
        }
        assert_eq!(tier_count(1, 6), 256);
    }

    #[test]
    fn uncached_tiers_match_cached_order() {
        let mut cached = Enumerator::new(1);
        cached.prepare(5);
        let fresh = Enumerator::new(1);
        let collect = |en: &Enumerator| {
            let mut v = Vec::new();
            let _ = en.visit(5, &mut |e| {
                v.push(e.to_string());
                ControlFlow::Continue(())
            });
            v
        };
        assert_eq!(collect(&cached), collect(&fresh));
    }
}

//! Program-induction kernel.
//!
//! The reference machine is a small typed expression language over reals:
//! variables, the constants 0, 1 and 2, `add`, `sub`, `mul`, safe division
//! and `ite` guarded by a `lt` comparison. Programs are searched in order of
//! node count, so the first fitting program found is a shortest one and the
//! search realizes the `2^-len` length prior.

mod enumerate;
mod eval;
mod induce;
mod sexpr;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use enumerate::{enumerate_programs, tier_count, Enumerator};
pub use induce::{induce, induce_with, InduceMode, InduceOptions, InductionResult, EXACT_TOLERANCE};
pub use sexpr::parse_program;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("program reads x{needed} but only {got} inputs were given")]
    Arity { needed: usize, got: usize },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
    #[error("evaluation step limit exceeded")]
    StepLimit,
    #[error("no examples")]
    NoExamples,
    #[error("inconsistent example arity")]
    InconsistentArity,
    #[error("parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Division that yields 0 when the divisor is within 1e-12 of zero.
    DivSafe,
}

impl BinOp {
    /// Declaration order, which is also enumeration order.
    pub const ALL: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::DivSafe];

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::DivSafe => "div",
        }
    }
}

/// Real-typed expression. The only boolean form, `lt`, exists solely as the
/// guard of `Ite`, which keeps every tree well-typed by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(usize),
    Const(u8),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    /// `if lhs < rhs { then } else { els }`
    Ite {
        lhs: Arc<Expr>,
        rhs: Arc<Expr>,
        then: Arc<Expr>,
        els: Arc<Expr>,
    },
}

impl Expr {
    pub const CONSTANTS: [u8; 3] = [0, 1, 2];

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn ite(lhs: Expr, rhs: Expr, then: Expr, els: Expr) -> Expr {
        Expr::Ite {
            lhs: Arc::new(lhs),
            rhs: Arc::new(rhs),
            then: Arc::new(then),
            els: Arc::new(els),
        }
    }

    /// Node count; the `lt` guard of an `ite` counts as a node.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Const(_) => 1,
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
            Expr::Ite { lhs, rhs, then, els } => {
                2 + lhs.size() + rhs.size() + then.size() + els.size()
            }
        }
    }

    /// Largest variable index read, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) => None,
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
            Expr::Ite { lhs, rhs, then, els } => lhs
                .max_var()
                .max(rhs.max_var())
                .max(then.max_var())
                .max(els.max_var()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Binary(op, a, b) => write!(f, "({} {a} {b})", op.name()),
            Expr::Ite { lhs, rhs, then, els } => {
                write!(f, "(ite (lt {lhs} {rhs}) {then} {els})")
            }
        }
    }
}

/// A program with its cached length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    root: Arc<Expr>,
    len: usize,
}

impl Program {
    pub fn new(root: Expr) -> Self {
        Self::from_arc(Arc::new(root))
    }

    pub fn from_arc(root: Arc<Expr>) -> Self {
        let len = root.size();
        Program { root, len }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    /// Node count `l(p)`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Prior weight `2^-l(p)`.
    pub fn prior_weight(&self) -> f64 {
        (-(self.len as f64)).exp2()
    }

    pub fn eval(&self, inputs: &[f64]) -> Result<f64, KernelError> {
        eval::eval_program(self, inputs)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_prior() {
        let p = Program::new(Expr::bin(BinOp::Add, Expr::Var(0), Expr::Const(1)));
        assert_eq!(p.len(), 3);
        assert_eq!(p.prior_weight(), 0.125);
        let ite = Expr::ite(Expr::Var(0), Expr::Const(1), Expr::Const(0), Expr::Const(2));
        assert_eq!(ite.size(), 6);
        assert_eq!(ite.to_string(), "(ite (lt x0 1) 0 2)");
    }
}

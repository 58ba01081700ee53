use super::{BinOp, Expr, KernelError, Program};

const DIV_EPS: f64 = 1e-12;
/// Node visits allowed per example, per node of the program.
const STEPS_PER_NODE: usize = 10;

pub(super) fn eval_program(p: &Program, inputs: &[f64]) -> Result<f64, KernelError> {
    if let Some(max) = p.root().max_var() {
        if max >= inputs.len() {
            return Err(KernelError::Arity {
                needed: max,
                got: inputs.len(),
            });
        }
    }
    let mut steps = STEPS_PER_NODE * p.len();
    eval_expr(p.root(), inputs, &mut steps)
}

/// Evaluates without the arity pre-check; callers guarantee it.
pub(super) fn eval_unchecked(e: &Expr, inputs: &[f64]) -> Result<f64, KernelError> {
    let mut steps = STEPS_PER_NODE * e.size();
    eval_expr(e, inputs, &mut steps)
}

fn finite(v: f64) -> Result<f64, KernelError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::NonFinite)
    }
}

fn eval_expr(e: &Expr, x: &[f64], steps: &mut usize) -> Result<f64, KernelError> {
    if *steps == 0 {
        return Err(KernelError::StepLimit);
    }
    *steps -= 1;
    match e {
        Expr::Var(i) => finite(x[*i]),
        Expr::Const(c) => Ok(f64::from(*c)),
        Expr::Binary(op, a, b) => {
            let a = eval_expr(a, x, steps)?;
            let b = eval_expr(b, x, steps)?;
            finite(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::DivSafe => {
                    if b.abs() <= DIV_EPS {
                        0.0
                    } else {
                        a / b
                    }
                }
            })
        }
        Expr::Ite { lhs, rhs, then, els } => {
            // the guard node
            if *steps == 0 {
                return Err(KernelError::StepLimit);
            }
            *steps -= 1;
            let l = eval_expr(lhs, x, steps)?;
            let r = eval_expr(rhs, x, steps)?;
            if l < r {
                eval_expr(then, x, steps)
            } else {
                eval_expr(els, x, steps)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    fn run(src: &str, x: &[f64]) -> Result<f64, KernelError> {
        parse_program(src).unwrap().eval(x)
    }

    #[test]
    fn semantics() {
        assert_eq!(run("(add x0 1)", &[5.0]), Ok(6.0));
        assert_eq!(run("(div 1 0)", &[]), Ok(0.0));
        assert_eq!(run("(ite (lt x0 1) 0 2)", &[0.5]), Ok(0.0));
        assert_eq!(run("(ite (lt x0 1) 0 2)", &[1.0]), Ok(2.0));
        assert_eq!(run("(sub (mul x1 2) x0)", &[1.0, 4.0]), Ok(7.0));
    }

    #[test]
    fn errors() {
        assert_eq!(run("x1", &[1.0]), Err(KernelError::Arity { needed: 1, got: 1 }));
        assert_eq!(run("(mul x0 x0)", &[1e200]), Err(KernelError::NonFinite));
        assert_eq!(run("x0", &[f64::NAN]), Err(KernelError::NonFinite));
    }
}

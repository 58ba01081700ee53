use super::{BinOp, Expr, KernelError, Program};

/// Parses the s-expression form, e.g. `(add x0 1)` or
/// `(ite (lt x0 1) 0 2)`. Constants are limited to 0, 1 and 2.
pub fn parse_program(src: &str) -> Result<Program, KernelError> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(Program::new(e))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> KernelError {
        KernelError::Parse {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn atom(&mut self) -> &str {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn eat(&mut self, c: char) -> Result<(), KernelError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, KernelError> {
        self.skip_ws();
        if !self.src[self.pos..].starts_with('(') {
            let start = self.pos;
            let atom = self.atom().to_string();
            return match atom.as_str() {
                "0" => Ok(Expr::Const(0)),
                "1" => Ok(Expr::Const(1)),
                "2" => Ok(Expr::Const(2)),
                a if a.starts_with('x') => a[1..].parse().map(Expr::Var).map_err(|_| {
                    KernelError::Parse {
                        pos: start,
                        message: format!("bad variable `{a}`"),
                    }
                }),
                "" => Err(self.err("expected an expression")),
                a => Err(KernelError::Parse {
                    pos: start,
                    message: format!("unknown atom `{a}` (constants are 0, 1, 2)"),
                }),
            };
        }
        self.eat('(')?;
        let head_pos = self.pos;
        let head = self.atom().to_string();
        let e = if head == "ite" {
            self.eat('(')?;
            if self.atom() != "lt" {
                return Err(self.err("`ite` guard must be `(lt a b)`"));
            }
            let lhs = self.expr()?;
            let rhs = self.expr()?;
            self.eat(')')?;
            let then = self.expr()?;
            let els = self.expr()?;
            Expr::ite(lhs, rhs, then, els)
        } else {
            let op = BinOp::ALL
                .into_iter()
                .find(|op| op.name() == head)
                .ok_or(KernelError::Parse {
                    pos: head_pos,
                    message: format!("unknown operator `{head}`"),
                })?;
            let a = self.expr()?;
            let b = self.expr()?;
            Expr::bin(op, a, b)
        };
        self.eat(')')?;
        Ok(e)
    }
}

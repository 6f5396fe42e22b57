use std::fmt;

use super::Expr;

// Precedence levels, loosest to tightest.
const SUM: u8 = 0;
const TERM: u8 = 1;
const UNARY: u8 = 2;
const POWER: u8 = 3;
const ATOM: u8 = 4;

/// Prints a number so that the surface parser reads back the same `f64`.
pub(crate) fn format_number(value: f64) -> String {
    format!("{value}")
}

/// The positive part of an addend that reads with a leading minus.
fn negated_addend(x: &Expr) -> Option<Expr> {
    match x {
        Expr::Neg(inner) => Some((**inner).clone()),
        Expr::Const(c) if *c < 0.0 => Some(Expr::Const(-c)),
        Expr::Quotient(a, b) => negated_addend(a).map(|a| Expr::Quotient(Box::new(a), b.clone())),
        Expr::Product(xs) => {
            let first = negated_addend(xs.first()?)?;
            let mut rest = xs[1..].to_vec();
            if first != Expr::Const(1.0) || rest.is_empty() {
                rest.insert(0, first);
            }
            Some(if rest.len() == 1 { rest.remove(0) } else { Expr::Product(rest) })
        }
        _ => None,
    }
}

impl Expr {
    fn level(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => UNARY,
            Expr::Const(_) | Expr::Var(_) | Expr::Sin(_) | Expr::Cos(_) | Expr::Sqrt(_) => ATOM,
            Expr::Sum(_) => SUM,
            Expr::Product(_) | Expr::Quotient(_, _) => TERM,
            Expr::Neg(_) => UNARY,
            Expr::Pow(_, _) => POWER,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, required: u8) -> fmt::Result {
        let paren = self.level() < required;
        if paren {
            f.write_str("(")?;
        }
        self.write_bare(f)?;
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }

    fn write_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => f.write_str(&format_number(*c)),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_at(f, UNARY)
            }
            Expr::Sum(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i == 0 {
                        x.write_at(f, TERM)?;
                        continue;
                    }
                    match negated_addend(x) {
                        Some(positive) => {
                            f.write_str(" - ")?;
                            positive.write_at(f, TERM)?;
                        }
                        None => {
                            f.write_str(" + ")?;
                            x.write_at(f, TERM)?;
                        }
                    }
                }
                Ok(())
            }
            Expr::Product(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i == 0 {
                        // left associativity lets a leading quotient stay bare
                        let required = if matches!(x, Expr::Quotient(_, _)) { TERM } else { UNARY };
                        x.write_at(f, required)?;
                    } else {
                        f.write_str("*")?;
                        let required = if matches!(x, Expr::Neg(_)) { POWER } else { UNARY };
                        x.write_at(f, required)?;
                    }
                }
                Ok(())
            }
            Expr::Quotient(a, b) => {
                a.write_at(f, TERM)?;
                f.write_str("/")?;
                b.write_at(f, UNARY)
            }
            Expr::Pow(a, n) => {
                a.write_at(f, ATOM)?;
                write!(f, "^{n}")
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, SUM)
    }
}

use super::{divide, power, square_root, Expr};
use crate::error::{Error, Result};

/// An [`Expr`] with variables resolved to slot indices, for inner loops.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledExpr {
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Slot(usize),
    Neg(Box<Node>),
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Quotient(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Sqrt(Box<Node>),
}

impl CompiledExpr {
    /// Resolves every variable of `expr` against `slots`.
    pub fn new(expr: &Expr, slots: &[String]) -> Result<Self> {
        Ok(CompiledExpr {
            root: lower(expr, slots)?,
        })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        run(&self.root, values)
    }
}

fn lower(expr: &Expr, slots: &[String]) -> Result<Node> {
    let boxed = |e: &Expr| lower(e, slots).map(Box::new);
    Ok(match expr {
        Expr::Const(c) => Node::Const(*c),
        Expr::Var(name) => Node::Slot(
            slots
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?,
        ),
        Expr::Neg(a) => Node::Neg(boxed(a)?),
        Expr::Sum(xs) => Node::Sum(xs.iter().map(|x| lower(x, slots)).collect::<Result<_>>()?),
        Expr::Product(xs) => {
            Node::Product(xs.iter().map(|x| lower(x, slots)).collect::<Result<_>>()?)
        }
        Expr::Quotient(a, b) => Node::Quotient(boxed(a)?, boxed(b)?),
        Expr::Pow(a, n) => Node::Pow(boxed(a)?, *n),
        Expr::Sin(a) => Node::Sin(boxed(a)?),
        Expr::Cos(a) => Node::Cos(boxed(a)?),
        Expr::Sqrt(a) => Node::Sqrt(boxed(a)?),
    })
}

fn run(node: &Node, values: &[f64]) -> Result<f64> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Slot(i) => values[*i],
        Node::Neg(a) => -run(a, values)?,
        Node::Sum(xs) => {
            let mut acc = 0.0;
            for x in xs {
                acc += run(x, values)?;
            }
            acc
        }
        Node::Product(xs) => {
            let mut acc = 1.0;
            for x in xs {
                acc *= run(x, values)?;
            }
            acc
        }
        Node::Quotient(a, b) => divide(run(a, values)?, run(b, values)?)?,
        Node::Pow(a, n) => power(run(a, values)?, *n)?,
        Node::Sin(a) => run(a, values)?.sin(),
        Node::Cos(a) => run(a, values)?.cos(),
        Node::Sqrt(a) => square_root(run(a, values)?)?,
    })
}

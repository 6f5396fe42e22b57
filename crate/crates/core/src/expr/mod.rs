//! Symbolic scalar expressions.
//!
//! An [`Expr`] is an immutable tree over named real variables built from
//! constants, negation, n-ary sums and products, quotients, integer powers and
//! `sin`/`cos`/`sqrt`. Simplification is limited to constant folding and
//! flattening of nested sums and products; there is no canonical form, so
//! semantic equality is decided by [`equal_on_samples`].

mod compiled;
pub(crate) mod display;
pub(crate) mod sample;

use std::collections::{BTreeMap, BTreeSet};
use std::ops;

use crate::error::{Error, Result};

pub use compiled::CompiledExpr;
pub use sample::{equal_on_samples, SampleBox, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sqrt(Box<Expr>),
}

/// Values for named variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding(BTreeMap<String, f64>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    /// Binds `name`, replacing any previous value.
    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Copies every entry of `other` into `self`, overwriting on conflict.
    pub fn extend_from(&mut self, other: &Binding) {
        for (k, v) in other.iter() {
            self.set(k, v);
        }
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Binding {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Binding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn one() -> Self {
        Expr::Const(1.0)
    }

    pub fn pow(self, exponent: i32) -> Self {
        Expr::Pow(Box::new(self), exponent)
    }

    pub fn sin(self) -> Self {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Self {
        Expr::Cos(Box::new(self))
    }

    pub fn sqrt(self) -> Self {
        Expr::Sqrt(Box::new(self))
    }

    /// Folded sum of `terms`.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Sum(terms.into_iter().collect()).fold()
    }

    /// Folded product of `factors`.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        Expr::Product(factors.into_iter().collect()).fold()
    }

    /// Parses the infix surface syntax, e.g. `p^2/(2*m) + k*q^2/2`.
    pub fn parse(text: &str) -> Result<Expr> {
        crate::dsl::parse_expression(text)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => Vec::new(),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Sqrt(a) => {
                vec![a.as_ref()]
            }
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().collect(),
            Expr::Quotient(a, b) => vec![a.as_ref(), b.as_ref()],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        if let Expr::Var(name) = self {
            out.insert(name.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Var(v) => v == name,
            _ => self.children().into_iter().any(|c| c.mentions(name)),
        }
    }

    /// Evaluates with every free variable looked up in `binding`.
    pub fn eval(&self, binding: &Binding) -> Result<f64> {
        self.eval_with(&|name| binding.get(name))
    }

    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(name) => lookup(name).ok_or_else(|| Error::UnboundVariable(name.clone()))?,
            Expr::Neg(a) => -a.eval_with(lookup)?,
            Expr::Sum(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval_with(lookup)?;
                }
                acc
            }
            Expr::Product(xs) => {
                let mut acc = 1.0;
                for x in xs {
                    acc *= x.eval_with(lookup)?;
                }
                acc
            }
            Expr::Quotient(a, b) => divide(a.eval_with(lookup)?, b.eval_with(lookup)?)?,
            Expr::Pow(a, n) => power(a.eval_with(lookup)?, *n)?,
            Expr::Sin(a) => a.eval_with(lookup)?.sin(),
            Expr::Cos(a) => a.eval_with(lookup)?.cos(),
            Expr::Sqrt(a) => square_root(a.eval_with(lookup)?)?,
        })
    }

    /// Simultaneous substitution of variables, followed by folding.
    ///
    /// Replacement expressions are inserted verbatim; their own variables are
    /// never substituted again within the same call.
    pub fn substitute(&self, subst: &BTreeMap<String, Expr>) -> Expr {
        self.substitute_raw(subst).fold()
    }

    fn substitute_raw(&self, subst: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(name) => subst.get(name).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute_raw(subst))),
            Expr::Sum(xs) => Expr::Sum(xs.iter().map(|x| x.substitute_raw(subst)).collect()),
            Expr::Product(xs) => {
                Expr::Product(xs.iter().map(|x| x.substitute_raw(subst)).collect())
            }
            Expr::Quotient(a, b) => Expr::Quotient(
                Box::new(a.substitute_raw(subst)),
                Box::new(b.substitute_raw(subst)),
            ),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.substitute_raw(subst)), *n),
            Expr::Sin(a) => Expr::Sin(Box::new(a.substitute_raw(subst))),
            Expr::Cos(a) => Expr::Cos(Box::new(a.substitute_raw(subst))),
            Expr::Sqrt(a) => Expr::Sqrt(Box::new(a.substitute_raw(subst))),
        }
    }

    /// Renames variables; names absent from `renames` are kept.
    pub fn rename(&self, renames: &BTreeMap<String, String>) -> Expr {
        let subst = renames
            .iter()
            .map(|(from, to)| (from.clone(), Expr::Var(to.clone())))
            .collect();
        self.substitute(&subst)
    }

    /// Exact partial derivative with respect to `v`, constant-folded.
    pub fn diff(&self, v: &str) -> Expr {
        self.diff_raw(v).fold()
    }

    fn diff_raw(&self, v: &str) -> Expr {
        if !self.mentions(v) {
            return Expr::zero();
        }
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(name) => {
                if name == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::Neg(Box::new(a.diff_raw(v))),
            Expr::Sum(xs) => Expr::Sum(xs.iter().map(|x| x.diff_raw(v)).collect()),
            Expr::Product(xs) => {
                let mut terms = Vec::with_capacity(xs.len());
                for (i, xi) in xs.iter().enumerate() {
                    if !xi.mentions(v) {
                        continue;
                    }
                    let mut factors = xs.clone();
                    factors[i] = xi.diff_raw(v);
                    terms.push(Expr::Product(factors));
                }
                Expr::Sum(terms)
            }
            Expr::Quotient(a, b) => {
                let da = a.diff_raw(v);
                let db = b.diff_raw(v);
                let numerator = Expr::Sum(vec![
                    Expr::Product(vec![da, (**b).clone()]),
                    Expr::Neg(Box::new(Expr::Product(vec![(**a).clone(), db]))),
                ]);
                Expr::Quotient(Box::new(numerator), Box::new(Expr::Pow(b.clone(), 2)))
            }
            Expr::Pow(a, n) => Expr::Product(vec![
                Expr::Const(*n as f64),
                Expr::Pow(a.clone(), n - 1),
                a.diff_raw(v),
            ]),
            Expr::Sin(a) => Expr::Product(vec![Expr::Cos(a.clone()), a.diff_raw(v)]),
            Expr::Cos(a) => Expr::Neg(Box::new(Expr::Product(vec![
                Expr::Sin(a.clone()),
                a.diff_raw(v),
            ]))),
            Expr::Sqrt(a) => Expr::Quotient(
                Box::new(a.diff_raw(v)),
                Box::new(Expr::Product(vec![Expr::Const(2.0), Expr::Sqrt(a.clone())])),
            ),
        }
    }

    /// Constant folding plus flattening of nested sums and products.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => negate(a.fold()),
            Expr::Sum(xs) => {
                let mut items = Vec::with_capacity(xs.len());
                let mut constant = 0.0;
                for x in xs {
                    match x.fold() {
                        Expr::Sum(inner) => {
                            for y in inner {
                                match y {
                                    Expr::Const(c) => constant += c,
                                    other => items.push(other),
                                }
                            }
                        }
                        Expr::Const(c) => constant += c,
                        other => items.push(other),
                    }
                }
                if constant != 0.0 {
                    items.push(Expr::Const(constant));
                }
                match items.len() {
                    0 => Expr::zero(),
                    1 => items.pop().unwrap_or_else(Expr::zero),
                    _ => Expr::Sum(items),
                }
            }
            Expr::Product(xs) => {
                let mut items = Vec::with_capacity(xs.len());
                let mut constant = 1.0;
                let mut pending: Vec<Expr> = xs.iter().map(Expr::fold).collect();
                pending.reverse();
                while let Some(x) = pending.pop() {
                    match x {
                        Expr::Product(inner) => pending.extend(inner.into_iter().rev()),
                        Expr::Const(c) => constant *= c,
                        Expr::Neg(inner) => {
                            constant = -constant;
                            pending.push(*inner);
                        }
                        other => items.push(other),
                    }
                }
                make_product(constant, items)
            }
            Expr::Quotient(a, b) => {
                let num = a.fold();
                let den = b.fold();
                match (&num, &den) {
                    (_, Expr::Const(d)) if *d == 1.0 => num,
                    (Expr::Const(n), _) if *n == 0.0 => Expr::zero(),
                    (Expr::Const(n), Expr::Const(d)) if *d != 0.0 => Expr::Const(n / d),
                    (_, Expr::Const(d)) if *d != 0.0 => {
                        Expr::Product(vec![Expr::Const(1.0 / d), num]).fold()
                    }
                    _ => Expr::Quotient(Box::new(num), Box::new(den)),
                }
            }
            Expr::Pow(a, n) => {
                let base = a.fold();
                match (*n, &base) {
                    (0, _) => Expr::one(),
                    (1, _) => base,
                    (_, Expr::Const(c)) => {
                        let value = c.powi(*n);
                        if value.is_finite() && !(*c == 0.0 && *n < 0) {
                            Expr::Const(value)
                        } else {
                            Expr::Pow(Box::new(base), *n)
                        }
                    }
                    _ => Expr::Pow(Box::new(base), *n),
                }
            }
            Expr::Sin(a) => match a.fold() {
                Expr::Const(c) => Expr::Const(c.sin()),
                x => Expr::Sin(Box::new(x)),
            },
            Expr::Cos(a) => match a.fold() {
                Expr::Const(c) => Expr::Const(c.cos()),
                x => Expr::Cos(Box::new(x)),
            },
            Expr::Sqrt(a) => match a.fold() {
                Expr::Const(c) if c >= 0.0 => Expr::Const(c.sqrt()),
                x => Expr::Sqrt(Box::new(x)),
            },
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    /// Top-level addends after folding (a single term if not a sum).
    pub fn addends(&self) -> Vec<Expr> {
        match self.fold() {
            Expr::Sum(xs) => xs,
            Expr::Const(0.0) => Vec::new(),
            other => vec![other],
        }
    }
}

fn negate(x: Expr) -> Expr {
    match x {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        Expr::Product(mut fs) => match fs.first() {
            Some(Expr::Const(c)) => {
                let c = *c;
                fs.remove(0);
                make_product(-c, fs)
            }
            _ => Expr::Neg(Box::new(Expr::Product(fs))),
        },
        other => Expr::Neg(Box::new(other)),
    }
}

fn make_product(constant: f64, mut items: Vec<Expr>) -> Expr {
    if constant == 0.0 {
        return Expr::zero();
    }
    if items.is_empty() {
        return Expr::Const(constant);
    }
    let core = if items.len() == 1 {
        items.pop().unwrap_or_else(Expr::one)
    } else {
        Expr::Product(items)
    };
    if constant == 1.0 {
        core
    } else if constant == -1.0 {
        Expr::Neg(Box::new(core))
    } else {
        match core {
            Expr::Product(mut fs) => {
                fs.insert(0, Expr::Const(constant));
                Expr::Product(fs)
            }
            other => Expr::Product(vec![Expr::Const(constant), other]),
        }
    }
}

pub(crate) fn divide(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        Err(Error::Domain("division by zero".into()))
    } else {
        Ok(a / b)
    }
}

pub(crate) fn power(a: f64, n: i32) -> Result<f64> {
    if a == 0.0 && n < 0 {
        Err(Error::Domain("zero raised to a negative power".into()))
    } else {
        Ok(a.powi(n))
    }
}

pub(crate) fn square_root(a: f64) -> Result<f64> {
    if a < 0.0 {
        Err(Error::Domain(format!("sqrt of negative value {a}")))
    } else {
        Ok(a.sqrt())
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Const(value)
    }
}

impl From<&str> for Expr {
    fn from(name: &str) -> Self {
        Expr::Var(name.to_string())
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, rhs])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, Expr::Neg(Box::new(rhs))])
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Product(vec![self, rhs])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Quotient(Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

macro_rules! scalar_rhs {
    ($($tr:ident $f:ident),*) => {$(
        impl ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $f(self, rhs: f64) -> Expr {
                ops::$tr::$f(self, Expr::Const(rhs))
            }
        }
    )*};
}

scalar_rhs!(Add add, Sub sub, Mul mul, Div div);

impl ops::Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Product(vec![Expr::Const(self), rhs])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Expr {
        Expr::var(name)
    }

    fn parse(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn eval_polynomial() {
        let e = v("q").pow(2) + v("p");
        let b = Binding::new().with("q", 3.0).with("p", 1.0);
        assert_eq!(e.eval(&b).unwrap(), 10.0);
    }

    #[test]
    fn eval_puck_hamiltonian_at_rest() {
        let h = parse("p1^2/(2*(m+M)) + p2^2/(2*m*r^2) + M*g*(r-l)");
        let b: Binding = [
            ("r", 1.0),
            ("theta", 0.0),
            ("p1", 0.0),
            ("p2", 0.0),
            ("m", 1.0),
            ("M", 1.0),
            ("g", 1.0),
            ("l", 1.0),
        ]
        .into_iter()
        .collect();
        assert_eq!(h.eval(&b).unwrap(), 0.0);
    }

    #[test]
    fn eval_unbound() {
        assert_eq!(v("q").eval(&Binding::new()), Err(Error::UnboundVariable("q".into())));
    }

    #[test]
    fn eval_domain_errors() {
        let b = Binding::new().with("x", 0.0);
        assert!(matches!(parse("1/x").eval(&b), Err(Error::Domain(_))));
        assert!(matches!(parse("sqrt(x - 1)").eval(&b), Err(Error::Domain(_))));
        assert!(matches!(parse("x^-2").eval(&b), Err(Error::Domain(_))));
    }

    #[test]
    fn diff_power_rule() {
        assert_eq!(v("q").pow(2).diff("q"), Expr::Product(vec![Expr::Const(2.0), v("q")]));
        assert_eq!(v("q").pow(2).diff("q").to_string(), "2*q");
    }

    #[test]
    fn diff_product_rule() {
        let e = v("q").sin() * v("p");
        assert_eq!(e.diff("q"), Expr::Product(vec![v("q").cos(), v("p")]));
    }

    #[test]
    fn diff_quotient_against_finite_difference() {
        // d/dr p2^2/(2 m r^2) = -p2^2/(m r^3); at r=0.5, p2=0.3, m=1 that is -0.72.
        let e = parse("p2^2/(2*m*r^2)");
        let d = e.diff("r");
        let at = |r: f64| Binding::new().with("r", r).with("p2", 0.3).with("m", 1.0);
        let h = 1e-5;
        let fd = (e.eval(&at(0.5 + h)).unwrap() - e.eval(&at(0.5 - h)).unwrap()) / (2.0 * h);
        let exact = d.eval(&at(0.5)).unwrap();
        assert!((exact - fd).abs() < 1e-6);
        assert!((exact + 0.72).abs() < 1e-12);
        let closed = parse("-p2^2/(m*r^3)");
        let bx = SampleBox::new()
            .with("r", 0.3, 2.0)
            .with("p2", -1.0, 1.0)
            .with("m", 0.5, 2.0);
        assert!(equal_on_samples(&d, &closed, &bx, 50, 1e-10, 7).unwrap());
    }

    #[test]
    fn substitute_is_simultaneous() {
        let e = v("q") + v("p");
        let s: BTreeMap<_, _> = [("q".to_string(), v("p"))].into();
        assert_eq!(e.substitute(&s), Expr::Sum(vec![v("p"), v("p")]));

        let shift: BTreeMap<_, _> = [("q".to_string(), v("q") + Expr::one())].into();
        let once = v("q").substitute(&shift);
        assert_eq!(once, Expr::Sum(vec![v("q"), Expr::Const(1.0)]));
        let twice = once.substitute(&shift);
        assert_eq!(twice, Expr::Sum(vec![v("q"), Expr::Const(2.0)]));
    }

    #[test]
    fn substitute_then_eval() {
        let f = v("xbar").pow(2);
        let s: BTreeMap<_, _> = [("xbar".to_string(), v("x1"))].into();
        let g = f.substitute(&s);
        assert_eq!(g.eval(&Binding::new().with("x1", 2.0)).unwrap(), 4.0);
    }

    #[test]
    fn identity_substitution_is_fold() {
        let e = parse("(q + (p + 0)) * 1 * (2 * 3) - sin(0)");
        let id: BTreeMap<_, _> = e.free_vars().into_iter().map(|n| (n.clone(), Expr::Var(n))).collect();
        assert_eq!(e.substitute(&id), e.fold());
    }

    #[test]
    fn sampled_equality() {
        let bx = SampleBox::uniform(["q", "p"], -1.0, 1.0);
        assert!(equal_on_samples(
            &parse("(q+p)^2"),
            &parse("q^2 + 2*q*p + p^2"),
            &bx,
            50,
            1e-10,
            1
        )
        .unwrap());
        let bq = SampleBox::uniform(["q"], -1.0, 1.0);
        assert!(!equal_on_samples(&parse("q^2"), &parse("q^3"), &bq, 50, 1e-10, 1).unwrap());
        assert!(equal_on_samples(&parse("sin(q)^2 + cos(q)^2"), &Expr::one(), &bq, 50, 1e-10, 1)
            .unwrap());
    }

    #[test]
    fn folding_basics() {
        assert_eq!(parse("0*x + 1*y").fold(), v("y"));
        assert_eq!(parse("-(-x)").fold(), v("x"));
        assert_eq!(parse("2*(3*x)").fold(), Expr::Product(vec![Expr::Const(6.0), v("x")]));
        assert_eq!(parse("x^0").fold(), Expr::one());
        assert_eq!(parse("(-x)*y").fold(), -Expr::Product(vec![v("x"), v("y")]));
        assert_eq!(parse("sqrt(4)").fold(), Expr::Const(2.0));
        // division by a literal zero is left for eval to report
        assert!(matches!(parse("1/0").fold(), Expr::Quotient(_, _)));
    }

    #[test]
    fn eval_is_deterministic() {
        let e = parse("sin(q)*cos(p)/(1 + q^2) + sqrt(2 + p)");
        let b = Binding::new().with("q", 0.3).with("p", -0.7);
        assert_eq!(e.eval(&b).unwrap().to_bits(), e.eval(&b).unwrap().to_bits());
    }
}

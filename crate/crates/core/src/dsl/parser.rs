use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok, Token};
use crate::error::{Error, Result};
use crate::expr::Expr;

const FUNCTIONS: [&str; 3] = ["sin", "cos", "sqrt"];

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            tokens: tokenize(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T> {
        let pos = self.peek().pos;
        Err(Error::Syntax {
            line: pos.line,
            col: pos.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(s) if *s == sym)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &'static str) -> Result<Pos> {
        if self.is_sym(sym) {
            Ok(self.bump().pos)
        } else {
            self.error(&[&format!("`{sym}`")])
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Pos> {
        if self.is_keyword(kw) {
            Ok(self.bump().pos)
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn name(&mut self) -> Result<Name> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                let pos = self.bump().pos;
                Ok(Located::new(pos, s))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let negative = self.eat_sym("-");
        match self.peek().tok {
            Tok::Number(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            _ => self.error(&["number"]),
        }
    }

    fn skip_separators(&mut self) {
        while self.eat_sym(";") || self.eat_sym(",") {}
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Located<Expr>> {
        let pos = self.peek().pos;
        Ok(Located::new(pos, self.sum()?))
    }

    fn sum(&mut self) -> Result<Expr> {
        let first = self.term()?;
        let mut terms = vec![first];
        loop {
            if self.eat_sym("+") {
                terms.push(self.term()?);
            } else if self.eat_sym("-") {
                let t = self.term()?;
                terms.push(Expr::Neg(Box::new(t)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap_or_else(Expr::zero)
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        let mut open_product = false;
        loop {
            if self.eat_sym("*") {
                let rhs = self.unary()?;
                acc = match acc {
                    Expr::Product(mut fs) if open_product => {
                        fs.push(rhs);
                        Expr::Product(fs)
                    }
                    other => Expr::Product(vec![other, rhs]),
                };
                open_product = true;
            } else if self.eat_sym("/") {
                let rhs = self.unary()?;
                acc = Expr::Quotient(Box::new(acc), Box::new(rhs));
                open_product = false;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym("-") {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat_sym("^") {
            return Ok(base);
        }
        let parenthesized = self.eat_sym("(");
        let negative = self.eat_sym("-");
        let exponent = match self.peek().tok {
            Tok::Number(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                self.bump();
                v as i32
            }
            _ => return self.error(&["integer exponent"]),
        };
        if parenthesized {
            self.expect_sym(")")?;
        }
        Ok(Expr::Pow(Box::new(base), if negative { -exponent } else { exponent }))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().tok.clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                if FUNCTIONS.contains(&name.as_str()) {
                    self.bump();
                    self.expect_sym("(")?;
                    let arg = self.sum()?;
                    self.expect_sym(")")?;
                    let arg = Box::new(arg);
                    return Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Sqrt(arg),
                    });
                }
                self.bump();
                Ok(Expr::Var(name))
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.sum()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            _ => self.error(&["number", "identifier", "`(`", "`-`"]),
        }
    }

    // ---- declarations ----

    fn file(&mut self) -> Result<SystemFile> {
        let mut decls = Vec::new();
        loop {
            self.skip_separators();
            if self.peek().tok == Tok::Eof {
                return Ok(SystemFile { decls });
            }
            decls.push(self.decl()?);
        }
    }

    fn decl(&mut self) -> Result<Located<Decl>> {
        let pos = self.peek().pos;
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.error(&DECL_KEYWORDS),
        };
        let decl = match kw.as_str() {
            "param" => {
                self.bump();
                let name = self.name()?;
                let value = if self.eat_sym("=") { Some(self.number()?) } else { None };
                Decl::Param { name, value }
            }
            "phase_space" | "config_space" => {
                self.bump();
                let kind = if kw == "phase_space" { SpaceKind::Phase } else { SpaceKind::Config };
                let name = self.name()?;
                self.expect_sym("{")?;
                let mut items = Vec::new();
                loop {
                    self.skip_separators();
                    if self.eat_sym("}") {
                        break;
                    }
                    items.push(self.space_item(kind)?);
                }
                Decl::Space { kind, name, items }
            }
            "map" => {
                self.bump();
                let name = self.name()?;
                self.expect_sym(":")?;
                let source = self.name()?;
                self.expect_sym("->")?;
                let target = self.name()?;
                self.expect_sym("{")?;
                let mut assignments = Vec::new();
                loop {
                    self.skip_separators();
                    if self.eat_sym("}") {
                        break;
                    }
                    let lhs = match self.peek().tok {
                        Tok::Ident(_) => self.name()?,
                        _ => return self.error(&["identifier", "`}`"]),
                    };
                    self.expect_sym("=")?;
                    assignments.push((lhs, self.expr()?));
                }
                Decl::Map {
                    name,
                    source,
                    target,
                    assignments,
                }
            }
            "ham_system" | "lag_system" => {
                self.bump();
                let kind = if kw == "ham_system" {
                    SystemKind::Hamiltonian
                } else {
                    SystemKind::Lagrangian
                };
                let name = self.name()?;
                self.expect_sym("{")?;
                self.expect_keyword("span")?;
                let left = self.name()?;
                let apex = self.name()?;
                let right = self.name()?;
                self.expect_sym(";")?;
                self.expect_keyword(if kind == SystemKind::Hamiltonian { "H" } else { "V" })?;
                self.expect_sym("=")?;
                let decoration = self.expr()?;
                self.skip_separators();
                self.expect_sym("}")?;
                Decl::System {
                    kind,
                    name,
                    left,
                    apex,
                    right,
                    decoration,
                }
            }
            "compose" | "tensor" => {
                self.bump();
                let name = self.name()?;
                self.expect_sym("=")?;
                let left = self.name()?;
                self.expect_sym(if kw == "compose" { "*" } else { "+" })?;
                let right = self.name()?;
                if kw == "compose" {
                    Decl::Compose { name, left, right }
                } else {
                    Decl::Tensor { name, left, right }
                }
            }
            "legendre" => {
                self.bump();
                let name = self.name()?;
                self.expect_sym("=")?;
                let source = self.name()?;
                Decl::Legendre { name, source }
            }
            "simulate" => {
                self.bump();
                let system = self.name()?;
                self.expect_sym("{")?;
                let mut settings = Vec::new();
                loop {
                    self.skip_separators();
                    if self.eat_sym("}") {
                        break;
                    }
                    settings.push(self.setting()?);
                }
                Decl::Simulate { system, settings }
            }
            _ => return self.error(&DECL_KEYWORDS),
        };
        Ok(Located::new(pos, decl))
    }

    fn space_item(&mut self, kind: SpaceKind) -> Result<Located<SpaceItem>> {
        let pos = self.peek().pos;
        let item = match kind {
            SpaceKind::Phase if self.is_keyword("pair") => {
                self.bump();
                let q = self.name()?;
                let p = self.name()?;
                let coeff = if self.is_keyword("coeff") {
                    self.bump();
                    Some(self.number()?)
                } else {
                    None
                };
                SpaceItem::Pair { q, p, coeff }
            }
            SpaceKind::Config if self.is_keyword("coord") => {
                self.bump();
                SpaceItem::Coord(self.name()?)
            }
            SpaceKind::Config if self.is_keyword("metric") => {
                self.bump();
                SpaceItem::Metric(self.matrix()?)
            }
            SpaceKind::Phase => return self.error(&["`pair`", "`}`"]),
            SpaceKind::Config => return self.error(&["`coord`", "`metric`", "`}`"]),
        };
        Ok(Located::new(pos, item))
    }

    fn matrix(&mut self) -> Result<Vec<Vec<Located<Expr>>>> {
        self.expect_sym("[")?;
        let mut rows = Vec::new();
        loop {
            self.expect_sym("[")?;
            let mut row = vec![self.expr()?];
            while self.eat_sym(",") {
                row.push(self.expr()?);
            }
            self.expect_sym("]")?;
            rows.push(row);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("]")?;
        Ok(rows)
    }

    fn setting(&mut self) -> Result<Located<Setting>> {
        let pos = self.peek().pos;
        let key = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.error(&SETTING_KEYWORDS),
        };
        let setting = match key.as_str() {
            "dt" | "t_end" => {
                self.bump();
                self.expect_sym("=")?;
                let v = self.number()?;
                if key == "dt" {
                    Setting::Dt(v)
                } else {
                    Setting::TEnd(v)
                }
            }
            "method" => {
                self.bump();
                self.expect_sym("=")?;
                Setting::Method(self.name()?)
            }
            "init" => {
                self.bump();
                let name = self.name()?;
                self.expect_sym("=")?;
                Setting::Init(name, self.number()?)
            }
            "monitor" | "drive" => {
                self.bump();
                let name = self.name()?;
                self.expect_sym("=")?;
                let e = self.expr()?;
                if key == "monitor" {
                    Setting::Monitor(name, e)
                } else {
                    Setting::Drive(name, e)
                }
            }
            _ => return self.error(&SETTING_KEYWORDS),
        };
        Ok(Located::new(pos, setting))
    }
}

const DECL_KEYWORDS: [&str; 10] = [
    "`param`",
    "`phase_space`",
    "`config_space`",
    "`map`",
    "`ham_system`",
    "`lag_system`",
    "`compose`",
    "`tensor`",
    "`legendre`",
    "`simulate`",
];

const SETTING_KEYWORDS: [&str; 7] = [
    "`dt`", "`t_end`", "`method`", "`init`", "`monitor`", "`drive`", "`}`",
];

/// Parses one expression in the surface syntax.
pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut p = Parser::new(text)?;
    let e = p.sum()?;
    if p.peek().tok != Tok::Eof {
        return p.error(&["operator", "end of input"]);
    }
    Ok(e)
}

/// Parses and resolves a `.osys` file.
pub fn parse(text: &str) -> Result<SystemFile> {
    let mut p = Parser::new(text)?;
    let file = p.file()?;
    resolve(&file)?;
    Ok(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sym {
    Param,
    Space(SpaceKind),
    Map,
    System(SystemKind),
}

fn undeclared(name: &Name) -> Error {
    Error::UndeclaredIdentifier {
        name: name.node.clone(),
        line: name.pos.line,
        col: name.pos.col,
    }
}

fn wrong_kind(name: &Name, wanted: &str) -> Error {
    Error::Semantic(format!(
        "{}:{}: `{}` is not {wanted}",
        name.pos.line, name.pos.col, name.node
    ))
}

/// Declaration-level checks: declare-before-use, no redeclaration, unique
/// coordinate names inside each space, and the kind of every reference.
fn resolve(file: &SystemFile) -> Result<()> {
    let mut table: BTreeMap<String, Sym> = BTreeMap::new();
    let mut simulated: BTreeSet<String> = BTreeSet::new();
    let lookup = |table: &BTreeMap<String, Sym>, n: &Name| table.get(&n.node).copied().ok_or_else(|| undeclared(n));

    for decl in &file.decls {
        let sym = match &decl.node {
            Decl::Param { .. } => Sym::Param,
            Decl::Space { kind, items, .. } => {
                let mut seen = BTreeSet::new();
                for item in items {
                    let names: Vec<&Name> = match &item.node {
                        SpaceItem::Pair { q, p, .. } => vec![q, p],
                        SpaceItem::Coord(c) => vec![c],
                        SpaceItem::Metric(_) => vec![],
                    };
                    for n in names {
                        if !seen.insert(n.node.clone()) {
                            return Err(Error::DuplicateDeclaration {
                                name: n.node.clone(),
                                line: n.pos.line,
                                col: n.pos.col,
                            });
                        }
                    }
                }
                Sym::Space(*kind)
            }
            Decl::Map { source, target, .. } => {
                for n in [source, target] {
                    if !matches!(lookup(&table, n)?, Sym::Space(_)) {
                        return Err(wrong_kind(n, "a space"));
                    }
                }
                Sym::Map
            }
            Decl::System {
                kind,
                left,
                apex,
                right,
                ..
            } => {
                let space_kind = match kind {
                    SystemKind::Hamiltonian => SpaceKind::Phase,
                    SystemKind::Lagrangian => SpaceKind::Config,
                };
                if lookup(&table, apex)? != Sym::Space(space_kind) {
                    return Err(wrong_kind(apex, "a space of the matching kind"));
                }
                for n in [left, right] {
                    match lookup(&table, n)? {
                        Sym::Map => {}
                        Sym::Space(k) if k == space_kind => {}
                        _ => return Err(wrong_kind(n, "a map or a space of the matching kind")),
                    }
                }
                Sym::System(*kind)
            }
            Decl::Compose { left, right, .. } => {
                let a = lookup(&table, left)?;
                let b = lookup(&table, right)?;
                match (a, b) {
                    (Sym::System(x), Sym::System(y)) if x == y => Sym::System(x),
                    (Sym::System(_), _) => return Err(wrong_kind(right, "a system of the same kind")),
                    _ => return Err(wrong_kind(left, "a system")),
                }
            }
            Decl::Tensor { left, right, .. } => {
                for n in [left, right] {
                    if lookup(&table, n)? != Sym::System(SystemKind::Hamiltonian) {
                        return Err(wrong_kind(n, "a Hamiltonian system"));
                    }
                }
                Sym::System(SystemKind::Hamiltonian)
            }
            Decl::Legendre { source, .. } => {
                if lookup(&table, source)? != Sym::System(SystemKind::Lagrangian) {
                    return Err(wrong_kind(source, "a Lagrangian system"));
                }
                Sym::System(SystemKind::Hamiltonian)
            }
            Decl::Simulate { system, .. } => {
                if lookup(&table, system)? != Sym::System(SystemKind::Hamiltonian) {
                    return Err(wrong_kind(system, "a Hamiltonian system"));
                }
                if !simulated.insert(system.node.clone()) {
                    return Err(Error::DuplicateDeclaration {
                        name: system.node.clone(),
                        line: system.pos.line,
                        col: system.pos.col,
                    });
                }
                continue;
            }
        };
        if let Some(name) = decl.node.declared_name() {
            if table.insert(name.node.clone(), sym).is_some() {
                return Err(Error::DuplicateDeclaration {
                    name: name.node.clone(),
                    line: name.pos.line,
                    col: name.pos.col,
                });
            }
        }
    }
    Ok(())
}

//! Syntax tree of `.osys` system descriptions.

use super::lexer::Pos;
use crate::expr::Expr;

/// A node with its source position. Equality ignores the position.
#[derive(Debug, Clone)]
pub struct Located<T> {
    pub pos: Pos,
    pub node: T,
}

impl<T> Located<T> {
    pub fn new(pos: Pos, node: T) -> Self {
        Located { pos, node }
    }
}

impl<T: PartialEq> PartialEq for Located<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

pub type Name = Located<String>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemFile {
    pub decls: Vec<Located<Decl>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Phase,
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Hamiltonian,
    Lagrangian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Param {
        name: Name,
        value: Option<f64>,
    },
    Space {
        kind: SpaceKind,
        name: Name,
        items: Vec<Located<SpaceItem>>,
    },
    Map {
        name: Name,
        source: Name,
        target: Name,
        assignments: Vec<(Name, Located<Expr>)>,
    },
    System {
        kind: SystemKind,
        name: Name,
        left: Name,
        apex: Name,
        right: Name,
        decoration: Located<Expr>,
    },
    Compose {
        name: Name,
        left: Name,
        right: Name,
    },
    Tensor {
        name: Name,
        left: Name,
        right: Name,
    },
    Legendre {
        name: Name,
        source: Name,
    },
    Simulate {
        system: Name,
        settings: Vec<Located<Setting>>,
    },
}

impl Decl {
    /// The identifier this declaration introduces, if any.
    pub fn declared_name(&self) -> Option<&Name> {
        match self {
            Decl::Param { name, .. }
            | Decl::Space { name, .. }
            | Decl::Map { name, .. }
            | Decl::System { name, .. }
            | Decl::Compose { name, .. }
            | Decl::Tensor { name, .. }
            | Decl::Legendre { name, .. } => Some(name),
            Decl::Simulate { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceItem {
    Pair { q: Name, p: Name, coeff: Option<f64> },
    Coord(Name),
    Metric(Vec<Vec<Located<Expr>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    Dt(f64),
    TEnd(f64),
    Method(Name),
    Init(Name, f64),
    Monitor(Name, Located<Expr>),
    Drive(Name, Located<Expr>),
}

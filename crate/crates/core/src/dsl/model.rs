//! Evaluation of a parsed [`SystemFile`] into spaces, maps and systems.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::*;
use super::lexer::Pos;
use crate::dynamics::{Drive, Method};
use crate::error::{Error, Result};
use crate::expr::{Binding, Expr, SampleBox};
use crate::geometry::{BivectorConvention, CanonicalPair, ConfigSpace, CoordinateSpace, PhaseSpace, SmoothMap};
use crate::hamsy::{self, OpenHamiltonianSystem};
use crate::lagsy::{self, OpenLagrangianSystem};
use crate::legendre::{self, LegendreResult};
use crate::span::{SampleOptions, Span};

/// Interval for parameters declared without a value.
pub const FREE_PARAM_RANGE: (f64, f64) = (0.5, 2.0);

/// An error tied to the declaration or expression that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelError {
    pub pos: Pos,
    pub error: Error,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.error {
            // these already carry a position
            Error::Syntax { .. } | Error::UndeclaredIdentifier { .. } | Error::DuplicateDeclaration { .. } => {
                write!(f, "{}", self.error)
            }
            e => write!(f, "{}:{}: {e}", self.pos.line, self.pos.col),
        }
    }
}

impl std::error::Error for ModelError {}

fn at(pos: Pos) -> impl FnOnce(Error) -> ModelError {
    move |error| ModelError { pos, error }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Phase(PhaseSpace),
    Config(ConfigSpace),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEntry {
    pub map: SmoothMap,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Ham(OpenHamiltonianSystem),
    Lag(OpenLagrangianSystem),
}

/// How a system came to be.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Declared { left: String, right: String },
    Compose { left: String, right: String },
    Tensor { left: String, right: String },
    Legendre { source: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemEntry {
    pub name: String,
    pub system: System,
    pub origin: Origin,
    pub legendre: Option<LegendreResult>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Simulation {
    pub system: String,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub method: Option<Method>,
    pub init: Binding,
    pub monitors: Vec<(String, Expr)>,
    pub drives: Vec<Drive>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelOptions {
    pub convention: BivectorConvention,
    pub sampling: SampleOptions,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub params: Vec<(String, Option<f64>)>,
    pub spaces: BTreeMap<String, Space>,
    pub maps: Vec<(String, MapEntry)>,
    pub systems: Vec<SystemEntry>,
    pub simulations: Vec<Simulation>,
    pub options: ModelOptions,
}

fn check_expr(e: &Located<Expr>, allowed: &dyn Fn(&str) -> bool) -> std::result::Result<(), ModelError> {
    match e.node.free_vars().into_iter().find(|v| !allowed(v)) {
        Some(v) => Err(ModelError {
            pos: e.pos,
            error: Error::UndeclaredIdentifier {
                name: v,
                line: e.pos.line,
                col: e.pos.col,
            },
        }),
        None => Ok(()),
    }
}

impl Model {
    /// Builds every declaration in order. The file is assumed to have passed
    /// the parser's name resolution.
    pub fn build(file: &SystemFile, options: &ModelOptions) -> std::result::Result<Model, ModelError> {
        let mut model = Model {
            options: options.clone(),
            ..Model::default()
        };
        for decl in &file.decls {
            model.add(decl)?;
        }
        Ok(model)
    }

    pub fn param_names(&self) -> BTreeSet<String> {
        self.params.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Parameter values fixed by the file.
    pub fn param_binding(&self) -> Binding {
        self.params
            .iter()
            .filter_map(|(n, v)| v.map(|v| (n.clone(), v)))
            .collect()
    }

    /// Sampling options with parameters pinned to their declared values or
    /// drawn from [`FREE_PARAM_RANGE`]. Coordinates are filled in by the
    /// individual checks.
    pub fn sampling(&self) -> SampleOptions {
        let mut opts = self.options.sampling.clone();
        for (n, v) in &self.params {
            let (lo, hi) = match v {
                Some(v) => (*v, *v),
                None => FREE_PARAM_RANGE,
            };
            opts.bounds = opts.bounds.clone().with_default(n, lo, hi);
        }
        opts
    }

    pub fn system(&self, name: &str) -> Option<&SystemEntry> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn phase_space(&self, name: &str) -> Option<&PhaseSpace> {
        match self.spaces.get(name) {
            Some(Space::Phase(p)) => Some(p),
            _ => None,
        }
    }

    fn ham(&self, name: &str) -> Result<&OpenHamiltonianSystem> {
        match self.system(name).map(|s| &s.system) {
            Some(System::Ham(h)) => Ok(h),
            _ => Err(Error::Semantic(format!("`{name}` is not a Hamiltonian system"))),
        }
    }

    fn lag(&self, name: &str) -> Result<&OpenLagrangianSystem> {
        match self.system(name).map(|s| &s.system) {
            Some(System::Lag(l)) => Ok(l),
            _ => Err(Error::Semantic(format!("`{name}` is not a Lagrangian system"))),
        }
    }

    fn add(&mut self, decl: &Located<Decl>) -> std::result::Result<(), ModelError> {
        let pos = decl.pos;
        match &decl.node {
            Decl::Param { name, value } => self.params.push((name.node.clone(), *value)),
            Decl::Space { kind, name, items } => {
                let space = self.build_space(*kind, &name.node, items)?;
                self.spaces.insert(name.node.clone(), space);
            }
            Decl::Map {
                name,
                source,
                target,
                assignments,
            } => {
                let map = self.build_map(source, target, assignments)?;
                self.maps.push((
                    name.node.clone(),
                    MapEntry {
                        map,
                        source: source.node.clone(),
                        target: target.node.clone(),
                    },
                ));
            }
            Decl::System {
                kind,
                name,
                left,
                apex,
                right,
                decoration,
            } => {
                let system = self.build_system(*kind, &name.node, left, apex, right, decoration)?;
                self.systems.push(SystemEntry {
                    name: name.node.clone(),
                    system,
                    origin: Origin::Declared {
                        left: left.node.clone(),
                        right: right.node.clone(),
                    },
                    legendre: None,
                });
            }
            Decl::Compose { name, left, right } => {
                let system = self.compose(&name.node, &left.node, &right.node).map_err(at(pos))?;
                self.systems.push(SystemEntry {
                    name: name.node.clone(),
                    system,
                    origin: Origin::Compose {
                        left: left.node.clone(),
                        right: right.node.clone(),
                    },
                    legendre: None,
                });
            }
            Decl::Tensor { name, left, right } => {
                let t = hamsy::tensor(
                    self.ham(&left.node).map_err(at(left.pos))?,
                    self.ham(&right.node).map_err(at(right.pos))?,
                )
                .map_err(at(pos))?;
                let t = rename_ham(t, &name.node).map_err(at(pos))?;
                self.systems.push(SystemEntry {
                    name: name.node.clone(),
                    system: System::Ham(t),
                    origin: Origin::Tensor {
                        left: left.node.clone(),
                        right: right.node.clone(),
                    },
                    legendre: None,
                });
            }
            Decl::Legendre { name, source } => {
                let lag = self.lag(&source.node).map_err(at(source.pos))?;
                let result = legendre::to_hamiltonian(lag, &self.sampling()).map_err(at(pos))?;
                let ham = result
                    .ham
                    .clone()
                    .with_name(name.node.clone())
                    .with_convention(self.options.convention);
                self.systems.push(SystemEntry {
                    name: name.node.clone(),
                    system: System::Ham(ham),
                    origin: Origin::Legendre {
                        source: source.node.clone(),
                    },
                    legendre: Some(result),
                });
            }
            Decl::Simulate { system, settings } => {
                let sim = self.build_simulation(&system.node, settings)?;
                self.simulations.push(sim);
            }
        }
        Ok(())
    }

    fn build_space(&self, kind: SpaceKind, name: &str, items: &[Located<SpaceItem>]) -> std::result::Result<Space, ModelError> {
        let params = self.param_names();
        let pos = items.first().map(|i| i.pos).unwrap_or_default();
        match kind {
            SpaceKind::Phase => {
                let pairs = items
                    .iter()
                    .filter_map(|i| match &i.node {
                        SpaceItem::Pair { q, p, coeff } => {
                            Some(CanonicalPair::new(q.node.clone(), p.node.clone()).with_coeff(coeff.unwrap_or(1.0)))
                        }
                        _ => None,
                    })
                    .collect();
                let space = PhaseSpace::new(name, pairs)
                    .map_err(at(pos))?
                    .with_params(params)
                    .with_convention(self.options.convention);
                Ok(Space::Phase(space))
            }
            SpaceKind::Config => {
                let coords: Vec<String> = items
                    .iter()
                    .filter_map(|i| match &i.node {
                        SpaceItem::Coord(c) => Some(c.node.clone()),
                        _ => None,
                    })
                    .collect();
                let n = coords.len();
                let mut metric = vec![vec![Expr::zero(); n]; n];
                for item in items {
                    if let SpaceItem::Metric(rows) = &item.node {
                        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                            return Err(ModelError {
                                pos: item.pos,
                                error: Error::InvalidSpace {
                                    space: name.to_string(),
                                    detail: format!("metric must be {n}x{n}"),
                                },
                            });
                        }
                        for (i, row) in rows.iter().enumerate() {
                            for (j, e) in row.iter().enumerate() {
                                check_expr(e, &|v| coords.iter().any(|c| c == v) || params.contains(v))?;
                                metric[i][j] = e.node.clone();
                            }
                        }
                    }
                }
                let space = ConfigSpace::new(name, coords, metric).map_err(at(pos))?.with_params(params);
                Ok(Space::Config(space))
            }
        }
    }

    fn build_map(
        &self,
        source: &Name,
        target: &Name,
        assignments: &[(Name, Located<Expr>)],
    ) -> std::result::Result<SmoothMap, ModelError> {
        let params = self.param_names();
        let src = &self.spaces[&source.node];
        let dst = &self.spaces[&target.node];
        let (src_coords, dst_coords) = match (src, dst) {
            (Space::Phase(a), Space::Phase(b)) => (a.coords(), b.coords()),
            (Space::Config(a), Space::Config(b)) => (a.coords(), b.coords()),
            _ => {
                return Err(ModelError {
                    pos: target.pos,
                    error: Error::Semantic(format!(
                        "`{}` and `{}` are spaces of different kinds",
                        source.node, target.node
                    )),
                })
            }
        };
        for (lhs, rhs) in assignments {
            if !dst_coords.contains(&lhs.node) {
                return Err(ModelError {
                    pos: lhs.pos,
                    error: Error::UnknownCoordinate {
                        name: lhs.node.clone(),
                        space: target.node.clone(),
                    },
                });
            }
            check_expr(rhs, &|v| src_coords.iter().any(|c| c == v) || params.contains(v))?;
        }
        let pairs = assignments.iter().map(|(l, r)| (l.node.clone(), r.node.clone()));
        let pos = source.pos;
        match (src, dst) {
            (Space::Phase(a), Space::Phase(b)) => SmoothMap::new(a, b, pairs),
            (Space::Config(a), Space::Config(b)) => SmoothMap::new(a, b, pairs),
            _ => unreachable!("kinds checked above"),
        }
        .map_err(at(pos))
    }

    fn leg<S: CoordinateSpace>(
        &self,
        apex_name: &str,
        apex: &S,
        end: &Name,
        pick: fn(&Space) -> Option<&S>,
    ) -> std::result::Result<(S, SmoothMap), ModelError> {
        let err = |error| ModelError { pos: end.pos, error };
        if let Some(space) = self.spaces.get(&end.node) {
            let foot = pick(space).ok_or_else(|| err(Error::Semantic(format!("`{}` is the wrong kind of space", end.node))))?;
            let map = SmoothMap::projection(apex, foot).map_err(err)?;
            return Ok((foot.clone(), map));
        }
        let entry = self
            .maps
            .iter()
            .find(|(n, _)| *n == end.node)
            .map(|(_, e)| e)
            .ok_or_else(|| err(Error::Semantic(format!("`{}` is not a map or space", end.node))))?;
        if entry.source != apex_name {
            return Err(err(Error::Semantic(format!(
                "map `{}` starts at `{}`, not at the apex `{apex_name}`",
                end.node, entry.source
            ))));
        }
        let foot = pick(&self.spaces[&entry.target])
            .ok_or_else(|| err(Error::Semantic(format!("`{}` lands in the wrong kind of space", end.node))))?;
        Ok((foot.clone(), entry.map.clone()))
    }

    fn build_system(
        &self,
        kind: SystemKind,
        name: &str,
        left: &Name,
        apex: &Name,
        right: &Name,
        decoration: &Located<Expr>,
    ) -> std::result::Result<System, ModelError> {
        let params = self.param_names();
        let pos = decoration.pos;
        match (kind, &self.spaces[&apex.node]) {
            (SystemKind::Hamiltonian, Space::Phase(a)) => {
                check_expr(decoration, &|v| a.has_coord(v) || params.contains(v))?;
                let pick: fn(&Space) -> Option<&PhaseSpace> = |s| match s {
                    Space::Phase(p) => Some(p),
                    _ => None,
                };
                let (lf, ll) = self.leg(&apex.node, a, left, pick)?;
                let (rf, rl) = self.leg(&apex.node, a, right, pick)?;
                let span = Span::new(lf, a.clone(), rf, ll, rl).map_err(at(pos))?;
                let h = OpenHamiltonianSystem::new(name, span, decoration.node.clone()).map_err(at(pos))?;
                Ok(System::Ham(h))
            }
            (SystemKind::Lagrangian, Space::Config(a)) => {
                check_expr(decoration, &|v| a.has_coord(v) || params.contains(v))?;
                let pick: fn(&Space) -> Option<&ConfigSpace> = |s| match s {
                    Space::Config(c) => Some(c),
                    _ => None,
                };
                let (lf, ll) = self.leg(&apex.node, a, left, pick)?;
                let (rf, rl) = self.leg(&apex.node, a, right, pick)?;
                let span = Span::new(lf, a.clone(), rf, ll, rl).map_err(at(pos))?;
                let l = OpenLagrangianSystem::new(name, span, decoration.node.clone()).map_err(at(pos))?;
                Ok(System::Lag(l))
            }
            _ => Err(ModelError {
                pos: apex.pos,
                error: Error::Semantic(format!("apex `{}` does not match the system kind", apex.node)),
            }),
        }
    }

    fn compose(&self, name: &str, left: &str, right: &str) -> Result<System> {
        match &self.system(left).map(|s| &s.system) {
            Some(System::Ham(a)) => {
                let c = hamsy::compose(a, self.ham(right)?)?;
                Ok(System::Ham(rename_ham(c, name)?))
            }
            Some(System::Lag(a)) => {
                let c = lagsy::compose(a, self.lag(right)?)?;
                let span = c.span().clone().with_apex_name(name);
                Ok(System::Lag(OpenLagrangianSystem::new(name, span, c.potential().clone())?))
            }
            None => Err(Error::Semantic(format!("`{left}` is not a system"))),
        }
    }

    fn build_simulation(&self, system: &str, settings: &[Located<Setting>]) -> std::result::Result<Simulation, ModelError> {
        let ham = self.ham(system).map_err(at(Pos::default()))?;
        let apex = ham.apex();
        let params = self.param_names();
        let mut sim = Simulation {
            system: system.to_string(),
            ..Simulation::default()
        };
        for s in settings {
            match &s.node {
                Setting::Dt(v) => sim.dt = Some(*v),
                Setting::TEnd(v) => sim.t_end = Some(*v),
                Setting::Method(m) => sim.method = Some(m.node.parse().map_err(at(m.pos))?),
                Setting::Init(n, v) => {
                    if !apex.has_coord(&n.node) {
                        return Err(ModelError {
                            pos: n.pos,
                            error: Error::UnknownCoordinate {
                                name: n.node.clone(),
                                space: apex.name().to_string(),
                            },
                        });
                    }
                    sim.init.set(n.node.clone(), *v);
                }
                Setting::Monitor(n, e) => {
                    check_expr(e, &|v| apex.has_coord(v) || params.contains(v) || v == crate::dynamics::TIME)?;
                    sim.monitors.push((n.node.clone(), e.node.clone()));
                }
                Setting::Drive(n, e) => {
                    if !apex.qs().any(|q| q == n.node) {
                        return Err(ModelError {
                            pos: n.pos,
                            error: Error::UnknownCoordinate {
                                name: n.node.clone(),
                                space: apex.name().to_string(),
                            },
                        });
                    }
                    check_expr(e, &|v| params.contains(v) || v == crate::dynamics::TIME)?;
                    sim.drives.push(Drive {
                        coord: n.node.clone(),
                        value: e.node.clone(),
                    });
                }
            }
        }
        Ok(sim)
    }
}

/// Names a composite after its declaration; the apex takes the same name.
fn rename_ham(sys: OpenHamiltonianSystem, name: &str) -> Result<OpenHamiltonianSystem> {
    let span = sys.span().clone().with_apex_name(name);
    OpenHamiltonianSystem::new(name, span, sys.hamiltonian().clone())
}

/// Sample box over `names` in `[-1, 1]`, keeping whatever `bounds` fixes.
pub fn with_coordinate_defaults(bounds: &SampleBox, names: &[String]) -> SampleBox {
    names
        .iter()
        .fold(bounds.clone(), |b, n| b.with_default(n, -1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn build(text: &str) -> std::result::Result<Model, ModelError> {
        Model::build(&parse(text).unwrap(), &ModelOptions::default())
    }

    #[test]
    fn builds_and_composes() {
        let m = build(
            "param k = 1
             phase_space A { pair qA pA }
             phase_space B { pair qB pB }
             phase_space AB { pair qA pA pair qB pB }
             ham_system S { span A AB B ; H = k*qA*qB }
             ham_system T { span B AB A ; H = pA^2 }
             compose U = S * T",
        )
        .unwrap();
        let Some(System::Ham(u)) = m.system("U").map(|s| &s.system) else {
            panic!()
        };
        assert_eq!(u.apex().name(), "U");
        assert_eq!(u.apex().dim(), 6);
        assert!(m.sampling().bounds.get("k") == Some((1.0, 1.0)));
    }

    #[test]
    fn unknown_expression_variable_has_position() {
        let err = build("phase_space A { pair q p }\nham_system S { span A A A ; H = z }").unwrap_err();
        assert!(matches!(err.error, Error::UndeclaredIdentifier { ref name, line: 2, .. } if name == "z"));
    }

    #[test]
    fn maps_as_legs() {
        let m = build(
            "config_space L { coord x }
             map f : L -> L { x = x^2 }
             lag_system S { span f L L ; V = 0 }",
        )
        .unwrap();
        assert_eq!(m.maps[0].0, "f");
        let err = build(
            "config_space L { coord x }
             config_space K { coord y }
             map f : K -> L { x = y }
             lag_system S { span f L L ; V = 0 }",
        )
        .unwrap_err();
        assert!(matches!(err.error, Error::Semantic(_)));
    }

    #[test]
    fn foot_mismatch_is_reported() {
        let err = build(
            "phase_space A { pair a b }
             phase_space B { pair c d }
             ham_system S { span A A A ; H = 0 }
             ham_system T { span B B B ; H = 0 }
             compose U = S * T",
        )
        .unwrap_err();
        assert!(matches!(err.error, Error::FootMismatch { .. }));
        assert_eq!(err.pos.line, 5);
    }
}

//! Spans of coordinate spaces and their composition by pullback.
//!
//! A span `L ← S → R` is an apex `S` with two legs into the feet. Two spans
//! sharing a foot compose by gluing their apexes along the coordinates the
//! connecting legs send onto that foot. Only projection-relabel connecting
//! legs are composable: the fibered product of two coordinate projections is
//! again a coordinate space, obtained by identifying the shared units.
//!
//! Composite coordinates keep their original names. Where two names collide
//! they are qualified with the apex name of their origin (`S_q`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Binding, Expr, SampleBox};
use crate::geometry::{
    poisson_defect, submersion_defect, CanonicalPair, ConfigSpace, CoordinateSpace, MapKind,
    PhaseSpace, SmoothMap,
};

pub use crate::geometry::SmoothMap as Leg;

/// Space-specific pieces of gluing and leg validation.
pub trait Gluable: CoordinateSpace {
    /// Builds the apex described by `gluing` from the two input apexes.
    fn glue(left: &Self, right: &Self, gluing: &Gluing, name: &str) -> Result<Self>;

    /// Structural defect of a projection leg, if any.
    fn projection_defect(_src: &Self, _dst: &Self, _pattern: &BTreeMap<String, String>) -> Option<String> {
        None
    }

    /// Sampled structural defect of a general leg beyond the rank condition.
    fn sampled_defect(_map: &SmoothMap, _src: &Self, _dst: &Self, _opts: &SampleOptions) -> Result<Option<String>> {
        Ok(None)
    }

    /// Whether the relabelling `self coord -> other coord` carries the
    /// per-unit data (form coefficients, metric) of `self` onto `other`.
    fn relabel_preserves(&self, other: &Self, to_other: &BTreeMap<String, String>) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Span<S> {
    left_foot: S,
    apex: S,
    right_foot: S,
    left_leg: SmoothMap,
    right_leg: SmoothMap,
}

impl<S: CoordinateSpace> Span<S> {
    /// Checks that both legs start at the apex and land on their feet.
    pub fn new(left_foot: S, apex: S, right_foot: S, left_leg: SmoothMap, right_leg: SmoothMap) -> Result<Self> {
        for (leg, foot, side) in [(&left_leg, &left_foot, "left"), (&right_leg, &right_foot, "right")] {
            if leg.source_coords() != apex.coords().as_slice() {
                return Err(Error::MalformedAssignment(format!(
                    "{side} leg does not start at apex `{}`",
                    apex.name()
                )));
            }
            if leg.target_coords() != foot.coords().as_slice() {
                return Err(Error::MalformedAssignment(format!(
                    "{side} leg does not land on foot `{}`",
                    foot.name()
                )));
            }
        }
        Ok(Span {
            left_foot,
            apex,
            right_foot,
            left_leg,
            right_leg,
        })
    }

    /// Span whose legs project onto same-named coordinates.
    pub fn from_projections(left_foot: S, apex: S, right_foot: S) -> Result<Self> {
        let l = SmoothMap::projection(&apex, &left_foot)?;
        let r = SmoothMap::projection(&apex, &right_foot)?;
        Self::new(left_foot, apex, right_foot, l, r)
    }

    pub fn left_foot(&self) -> &S {
        &self.left_foot
    }

    pub fn right_foot(&self) -> &S {
        &self.right_foot
    }

    pub fn apex(&self) -> &S {
        &self.apex
    }

    pub fn left_leg(&self) -> &SmoothMap {
        &self.left_leg
    }

    pub fn right_leg(&self) -> &SmoothMap {
        &self.right_leg
    }

    /// Replaces the feet and apex by spaces with the same coordinates (for
    /// instance to change a convention); legs are kept.
    pub fn map_spaces(self, f: impl Fn(S) -> S) -> Self {
        Span {
            left_foot: f(self.left_foot),
            apex: f(self.apex),
            right_foot: f(self.right_foot),
            left_leg: self.left_leg,
            right_leg: self.right_leg,
        }
    }

    /// Same span with the apex renamed (names qualify coordinates on collision).
    pub fn with_apex_name(mut self, name: &str) -> Self
    where
        S: Renamable,
    {
        self.apex = self.apex.with_name(name);
        self
    }
}

/// Spaces whose display name can be changed.
pub trait Renamable {
    fn with_name(self, name: &str) -> Self;
}

impl Renamable for PhaseSpace {
    fn with_name(self, name: &str) -> Self {
        self.renamed(name)
    }
}

impl Renamable for ConfigSpace {
    fn with_name(self, name: &str) -> Self {
        self.renamed(name)
    }
}

/// Where a unit of the glued apex comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitOrigin {
    Left(usize),
    Shared { left: usize, right: usize },
    Right(usize),
}

/// Layout of a glued apex: unit origins, final names and the projections
/// from each input apex, as coordinate renamings.
#[derive(Debug, Clone, PartialEq)]
pub struct Gluing {
    pub origins: Vec<UnitOrigin>,
    pub names: Vec<Vec<String>>,
    pub left_rename: BTreeMap<String, String>,
    pub right_rename: BTreeMap<String, String>,
}

impl Gluing {
    pub fn coords(&self) -> Vec<String> {
        self.names.iter().flatten().cloned().collect()
    }

    pub fn shared_count(&self) -> usize {
        self.origins
            .iter()
            .filter(|o| matches!(o, UnitOrigin::Shared { .. }))
            .count()
    }

    /// Gluing of two spaces along `shared` unit index pairs, ordered as
    /// left-only units, shared units, then right-only units.
    pub fn along<S: CoordinateSpace>(left: &S, right: &S, shared: &[(usize, usize)]) -> Gluing {
        let lu = left.units();
        let ru = right.units();
        let shared_l: BTreeSet<usize> = shared.iter().map(|s| s.0).collect();
        let shared_r: BTreeSet<usize> = shared.iter().map(|s| s.1).collect();
        let mut origins = Vec::new();
        origins.extend((0..lu.len()).filter(|i| !shared_l.contains(i)).map(UnitOrigin::Left));
        origins.extend(shared.iter().map(|&(l, r)| UnitOrigin::Shared { left: l, right: r }));
        origins.extend((0..ru.len()).filter(|i| !shared_r.contains(i)).map(UnitOrigin::Right));

        let candidates: Vec<Vec<String>> = origins
            .iter()
            .map(|o| match o {
                UnitOrigin::Left(i) | UnitOrigin::Shared { left: i, .. } => lu[*i].clone(),
                UnitOrigin::Right(i) => ru[*i].clone(),
            })
            .collect();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for n in candidates.iter().flatten() {
            *counts.entry(n.as_str()).or_default() += 1;
        }
        let (pl, pr) = if left.name() == right.name() {
            (format!("{}1", left.name()), format!("{}2", right.name()))
        } else {
            (left.name().to_string(), right.name().to_string())
        };
        let mut names: Vec<Vec<String>> = candidates
            .iter()
            .zip(&origins)
            .map(|(unit, o)| {
                let prefix = if matches!(o, UnitOrigin::Right(_)) { &pr } else { &pl };
                unit.iter()
                    .map(|n| if counts[n.as_str()] > 1 { format!("{prefix}_{n}") } else { n.clone() })
                    .collect()
            })
            .collect();
        let mut taken = BTreeSet::new();
        for unit in names.iter_mut() {
            for n in unit.iter_mut() {
                let base = n.clone();
                let mut k = 2;
                while !taken.insert(n.clone()) {
                    *n = format!("{base}_{k}");
                    k += 1;
                }
            }
        }

        let mut left_rename = BTreeMap::new();
        let mut right_rename = BTreeMap::new();
        for (o, unit) in origins.iter().zip(&names) {
            let record = |map: &mut BTreeMap<String, String>, from: &[String]| {
                for (f, t) in from.iter().zip(unit) {
                    map.insert(f.clone(), t.clone());
                }
            };
            match *o {
                UnitOrigin::Left(i) => record(&mut left_rename, &lu[i]),
                UnitOrigin::Right(i) => record(&mut right_rename, &ru[i]),
                UnitOrigin::Shared { left, right } => {
                    record(&mut left_rename, &lu[left]);
                    record(&mut right_rename, &ru[right]);
                }
            }
        }
        Gluing {
            origins,
            names,
            left_rename,
            right_rename,
        }
    }
}

impl Gluable for PhaseSpace {
    fn glue(left: &Self, right: &Self, gluing: &Gluing, name: &str) -> Result<Self> {
        let pairs = gluing
            .origins
            .iter()
            .zip(&gluing.names)
            .map(|(o, n)| {
                let coeff = match *o {
                    UnitOrigin::Left(i) => left.pairs()[i].coeff,
                    UnitOrigin::Right(i) => right.pairs()[i].coeff,
                    UnitOrigin::Shared { left: l, right: r } => left.pairs()[l].coeff + right.pairs()[r].coeff,
                };
                CanonicalPair::new(n[0].clone(), n[1].clone()).with_coeff(coeff)
            })
            .collect();
        Ok(PhaseSpace::new(name, pairs)?
            .with_params(left.params().iter().chain(right.params()).cloned())
            .with_convention(left.convention()))
    }

    fn projection_defect(src: &Self, dst: &Self, pattern: &BTreeMap<String, String>) -> Option<String> {
        for pair in dst.pairs() {
            let image = &pattern[&pair.q];
            let source = src.pairs().iter().find(|s| &s.q == image)?;
            if source.coeff != pair.coeff {
                return Some(format!(
                    "form coefficient {} on ({}, {}) maps onto {} on ({}, {})",
                    source.coeff, source.q, source.p, pair.coeff, pair.q, pair.p
                ));
            }
        }
        None
    }

    fn sampled_defect(map: &SmoothMap, src: &Self, dst: &Self, opts: &SampleOptions) -> Result<Option<String>> {
        poisson_defect(map, src, dst, &opts.bounds, opts.samples, opts.tol, opts.seed)
    }

    fn relabel_preserves(&self, other: &Self, to_other: &BTreeMap<String, String>) -> bool {
        self.pairs().iter().all(|p| {
            let q = &to_other[&p.q];
            other.pairs().iter().any(|o| &o.q == q && o.coeff == p.coeff)
        })
    }
}

impl Gluable for ConfigSpace {
    fn glue(left: &Self, right: &Self, gluing: &Gluing, name: &str) -> Result<Self> {
        let coords = gluing.coords();
        let n = coords.len();
        let index: BTreeMap<&str, usize> = coords.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut metric: Vec<Vec<Vec<Expr>>> = vec![vec![Vec::new(); n]; n];
        for (space, rename) in [(left, &gluing.left_rename), (right, &gluing.right_rename)] {
            let names = space.coord_names();
            for (a, row) in space.metric().iter().enumerate() {
                for (b, entry) in row.iter().enumerate() {
                    if entry.is_zero() {
                        continue;
                    }
                    let i = index[rename[&names[a]].as_str()];
                    let j = index[rename[&names[b]].as_str()];
                    let renamed: BTreeMap<String, String> = rename.clone();
                    metric[i][j].push(entry.rename(&renamed));
                }
            }
        }
        let metric = metric
            .into_iter()
            .map(|row| row.into_iter().map(Expr::sum).collect())
            .collect();
        Ok(ConfigSpace::new(name, coords, metric)?.with_params(left.params().iter().chain(right.params()).cloned()))
    }

    fn relabel_preserves(&self, other: &Self, to_other: &BTreeMap<String, String>) -> bool {
        let names = self.coord_names();
        let other_index: BTreeMap<&str, usize> =
            other.coord_names().iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        for (a, row) in self.metric().iter().enumerate() {
            for (b, entry) in row.iter().enumerate() {
                let i = other_index[to_other[&names[a]].as_str()];
                let j = other_index[to_other[&names[b]].as_str()];
                if entry.rename(to_other) != other.metric()[i][j] {
                    return false;
                }
            }
        }
        true
    }
}

/// A composite span together with the gluing that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Pullback<S> {
    pub span: Span<S>,
    pub gluing: Gluing,
}

fn connecting_units<S: CoordinateSpace>(leg: &SmoothMap, apex: &S, foot: &S, label: &str) -> Result<Vec<usize>> {
    let pattern = leg
        .projection_pattern()
        .ok_or_else(|| Error::NonProjectionLeg(label.to_string()))?;
    let apex_units = apex.units();
    foot.units()
        .iter()
        .map(|unit| {
            let image: Option<Vec<String>> = unit.iter().map(|c| pattern.get(c).cloned()).collect();
            image
                .and_then(|image| apex_units.iter().position(|u| *u == image))
                .ok_or_else(|| Error::NonProjectionLeg(label.to_string()))
        })
        .collect()
}

/// Composes `ab: A ← S → B` with `bc: B ← S' → C` into `A ← S ×_B S' → C`.
pub fn pullback<S: Gluable>(ab: &Span<S>, bc: &Span<S>) -> Result<Pullback<S>> {
    if !ab.right_foot.same_shape(&bc.left_foot) {
        return Err(Error::FootMismatch {
            left: ab.right_foot.name().to_string(),
            right: bc.left_foot.name().to_string(),
        });
    }
    let foot = &ab.right_foot;
    let from_left = connecting_units(
        &ab.right_leg,
        &ab.apex,
        foot,
        &format!("right leg of `{}`", ab.apex.name()),
    )?;
    let from_right = connecting_units(
        &bc.left_leg,
        &bc.apex,
        &bc.left_foot,
        &format!("left leg of `{}`", bc.apex.name()),
    )?;
    let shared: Vec<(usize, usize)> = from_left.into_iter().zip(from_right).collect();
    let gluing = Gluing::along(&ab.apex, &bc.apex, &shared);
    let name = format!("{}_{}", ab.apex.name(), bc.apex.name());
    let apex = S::glue(&ab.apex, &bc.apex, &gluing, &name)?;
    let left_leg = ab.left_leg.reindexed(&gluing.left_rename, &apex, &ab.left_foot)?;
    let right_leg = bc.right_leg.reindexed(&gluing.right_rename, &apex, &bc.right_foot)?;
    let span = Span::new(ab.left_foot.clone(), apex, bc.right_foot.clone(), left_leg, right_leg)?;
    Ok(Pullback { span, gluing })
}

pub fn compose_spans<S: Gluable>(ab: &Span<S>, bc: &Span<S>) -> Result<Span<S>> {
    Ok(pullback(ab, bc)?.span)
}

/// `M ← M → M` with identity legs.
pub fn identity_span<S: CoordinateSpace>(space: &S) -> Span<S> {
    Span {
        left_foot: space.clone(),
        apex: space.clone(),
        right_foot: space.clone(),
        left_leg: SmoothMap::identity(space),
        right_leg: SmoothMap::identity(space),
    }
}

/// Product span `A×C ← S×T → B×D`, with the gluings used for the left feet,
/// the apexes and the right feet.
pub fn product_span<S: Gluable>(a: &Span<S>, b: &Span<S>) -> Result<(Span<S>, Gluing)> {
    let feet = |x: &S, y: &S| -> Result<(S, Gluing)> {
        let g = Gluing::along(x, y, &[]);
        let name = format!("{}_{}", x.name(), y.name());
        Ok((S::glue(x, y, &g, &name)?, g))
    };
    let (apex, apex_g) = feet(&a.apex, &b.apex)?;
    let (lf, lf_g) = feet(&a.left_foot, &b.left_foot)?;
    let (rf, rf_g) = feet(&a.right_foot, &b.right_foot)?;
    let leg = |foot: &S, foot_g: &Gluing, la: &SmoothMap, lb: &SmoothMap| -> Result<SmoothMap> {
        let mut assignment = Vec::new();
        for (t, e) in la.components() {
            assignment.push((foot_g.left_rename[t].clone(), e.rename(&apex_g.left_rename)));
        }
        for (t, e) in lb.components() {
            assignment.push((foot_g.right_rename[t].clone(), e.rename(&apex_g.right_rename)));
        }
        SmoothMap::new(&apex, foot, assignment)
    };
    let left_leg = leg(&lf, &lf_g, &a.left_leg, &b.left_leg)?;
    let right_leg = leg(&rf, &rf_g, &a.right_leg, &b.right_leg)?;
    Ok((Span::new(lf, apex.clone(), rf, left_leg, right_leg)?, apex_g))
}

/// A coordinate relabelling between two apexes that makes both leg
/// triangles commute.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanIso {
    /// First apex coordinate -> second apex coordinate.
    pub to_second: BTreeMap<String, String>,
    /// Second apex coordinate -> first apex coordinate.
    pub to_first: BTreeMap<String, String>,
    /// Whether form coefficients (or metrics) also correspond.
    pub preserves_structure: bool,
}

impl SpanIso {
    /// Rewrites an expression over the second apex in first-apex coordinates.
    pub fn pull_back(&self, e: &Expr) -> Expr {
        e.rename(&self.to_first)
    }
}

/// Searches for a pair-preserving relabelling `j` of apex coordinates with
/// `left = left' ∘ j` and `right = right' ∘ j`. Feet must agree up to unit
/// order; legs are compared per foot coordinate name.
pub fn spans_isomorphic<S: Gluable>(s1: &Span<S>, s2: &Span<S>) -> Option<SpanIso> {
    find_isomorphism(s1, s2, |_| Ok(true)).unwrap_or(None)
}

/// Like [`spans_isomorphic`], but keeps searching until `accept` approves a
/// candidate. Same-named units are tried first.
pub fn find_isomorphism<S: Gluable>(
    s1: &Span<S>,
    s2: &Span<S>,
    mut accept: impl FnMut(&SpanIso) -> Result<bool>,
) -> Result<Option<SpanIso>> {
    if !s1.left_foot.same_units_unordered(&s2.left_foot) || !s1.right_foot.same_units_unordered(&s2.right_foot) {
        return Ok(None);
    }
    let u1 = s1.apex.units();
    let u2 = s2.apex.units();
    if u1.len() != u2.len() {
        return Ok(None);
    }
    // foot coordinates that each projection leg pins onto an apex coordinate
    let pins = |s: &Span<S>| -> BTreeMap<String, Vec<(usize, String)>> {
        let mut out: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        for (side, leg) in [(0, &s.left_leg), (1, &s.right_leg)] {
            if let Some(pattern) = leg.projection_pattern() {
                for (foot, apex) in pattern {
                    out.entry(apex).or_default().push((side, foot));
                }
            }
        }
        for v in out.values_mut() {
            v.sort();
        }
        out
    };
    let mut search = Search {
        u1: &u1,
        u2: &u2,
        pins1: pins(s1),
        pins2: pins(s2),
        choice: vec![usize::MAX; u1.len()],
        used: vec![false; u2.len()],
        found: None,
    };
    search.run(0, &mut |choice| {
        let (to_second, to_first) = relabelling(&u1, &u2, choice);
        if !legs_commute(s1, s2, &to_first) {
            return Ok(None);
        }
        let iso = SpanIso {
            preserves_structure: s1.apex.relabel_preserves(&s2.apex, &to_second),
            to_second,
            to_first,
        };
        Ok(if accept(&iso)? { Some(iso) } else { None })
    })?;
    Ok(search.found)
}

fn relabelling(
    u1: &[Vec<String>],
    u2: &[Vec<String>],
    choice: &[usize],
) -> (BTreeMap<String, String>, BTreeMap<String, String>) {
    let mut to_second = BTreeMap::new();
    let mut to_first = BTreeMap::new();
    for (i, &j) in choice.iter().enumerate() {
        for (a, b) in u1[i].iter().zip(&u2[j]) {
            to_second.insert(a.clone(), b.clone());
            to_first.insert(b.clone(), a.clone());
        }
    }
    (to_second, to_first)
}

type Candidate<'a> = dyn FnMut(&[usize]) -> Result<Option<SpanIso>> + 'a;

struct Search<'a> {
    u1: &'a [Vec<String>],
    u2: &'a [Vec<String>],
    pins1: BTreeMap<String, Vec<(usize, String)>>,
    pins2: BTreeMap<String, Vec<(usize, String)>>,
    choice: Vec<usize>,
    used: Vec<bool>,
    found: Option<SpanIso>,
}

impl Search<'_> {
    fn compatible(&self, i: usize, j: usize) -> bool {
        self.u1[i].len() == self.u2[j].len()
            && self.u1[i].iter().zip(&self.u2[j]).all(|(a, b)| self.pins1.get(a) == self.pins2.get(b))
    }

    fn run(&mut self, i: usize, check: &mut Candidate<'_>) -> Result<bool> {
        if i == self.u1.len() {
            self.found = check(&self.choice)?;
            return Ok(self.found.is_some());
        }
        let mut order: Vec<usize> = (0..self.u2.len()).collect();
        order.sort_by_key(|&j| self.u1[i] != self.u2[j]);
        for j in order {
            if self.used[j] || !self.compatible(i, j) {
                continue;
            }
            self.used[j] = true;
            self.choice[i] = j;
            if self.run(i + 1, check)? {
                return Ok(true);
            }
            self.used[j] = false;
        }
        Ok(false)
    }
}

fn legs_commute<S: CoordinateSpace>(s1: &Span<S>, s2: &Span<S>, to_first: &BTreeMap<String, String>) -> bool {
    [(&s1.left_leg, &s2.left_leg), (&s1.right_leg, &s2.right_leg)]
        .iter()
        .all(|(l1, l2)| {
            l1.components().all(|(t, e)| match l2.component(t) {
                Some(e2) => e.fold() == e2.rename(to_first),
                None => false,
            })
        })
}

/// Outcome of a leg validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Decided structurally.
    Proven,
    /// Passed all sampled checks at this many points; not a proof.
    Evidence(usize),
    Failed(String),
}

impl Verdict {
    pub fn is_failed(&self) -> bool {
        matches!(self, Verdict::Failed(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Proven => write!(f, "Proven"),
            Verdict::Evidence(n) => write!(f, "Evidence({n})"),
            Verdict::Failed(d) => write!(f, "Failed ({d})"),
        }
    }
}

/// Sampling parameters shared by the sampled checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOptions {
    pub bounds: SampleBox,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            bounds: SampleBox::new(),
            samples: 100,
            tol: 1e-9,
            seed: 42,
        }
    }
}

fn describe_point(point: &Binding, coords: &[String]) -> String {
    coords
        .iter()
        .filter_map(|c| point.get(c).map(|v| format!("{c}={}", crate::expr::display::format_number(v))))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Checks that a leg is a surjective submersion (and Poisson, between phase
/// spaces). Projection legs are decided structurally; general legs get
/// sampled evidence. Coordinates missing from the sampling box default to
/// `[-1, 1]`.
pub fn validate_leg<S: Gluable>(map: &SmoothMap, src: &S, dst: &S, opts: &SampleOptions) -> Result<Verdict> {
    if let Some(pattern) = map.projection_pattern() {
        return Ok(match S::projection_defect(src, dst, &pattern) {
            Some(d) => Verdict::Failed(d),
            None => Verdict::Proven,
        });
    }
    debug_assert_eq!(map.kind(), MapKind::General);
    let mut opts = opts.clone();
    for c in src.coords() {
        opts.bounds = opts.bounds.with_default(&c, -1.0, 1.0);
    }
    if let Some((rank, point)) = submersion_defect(map, &opts.bounds, opts.samples, opts.tol, opts.seed)? {
        return Ok(Verdict::Failed(format!("rank {rank} at {}", describe_point(&point, &src.coords()))));
    }
    if let Some(d) = S::sampled_defect(map, src, dst, &opts)? {
        return Ok(Verdict::Failed(d));
    }
    Ok(Verdict::Evidence(opts.samples))
}

/// Validates both legs of a span.
pub fn validate_span<S: Gluable>(span: &Span<S>, opts: &SampleOptions) -> Result<(Verdict, Verdict)> {
    Ok((
        validate_leg(&span.left_leg, &span.apex, &span.left_foot, opts)?,
        validate_leg(&span.right_leg, &span.apex, &span.right_foot, opts)?,
    ))
}

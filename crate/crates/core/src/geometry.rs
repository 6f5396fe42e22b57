//! Coordinate phase spaces, configuration spaces and smooth maps between
//! them, with the Poisson bracket, Hamiltonian vector fields and sampled
//! checks for Poisson maps and submersions.
//!
//! A [`PhaseSpace`] is an ordered list of canonical pairs `(q_i, p_i)`, each
//! carrying the coefficient `c_i > 0` of `dq_i ∧ dp_i` in the symplectic form.
//! Brackets and flows use the bivector coefficient `b_i`, which is `1/c_i`
//! (the inverse of the form) unless [`BivectorConvention::Literal`] is chosen.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Binding, Expr, SampleBox};
use crate::linalg;

/// How the bivector is derived from the form coefficients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BivectorConvention {
    /// `b_i = 1 / c_i`, so the bivector inverts the form.
    #[default]
    Inverse,
    /// `b_i = c_i`: the same coefficient on form and bivector.
    Literal,
}

impl std::str::FromStr for BivectorConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse" => Ok(BivectorConvention::Inverse),
            "paper" | "literal" => Ok(BivectorConvention::Literal),
            other => Err(Error::Config(format!("unknown bivector convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPair {
    pub q: String,
    pub p: String,
    /// Coefficient of `dq ∧ dp` in the symplectic form.
    pub coeff: f64,
}

impl CanonicalPair {
    pub fn new(q: impl Into<String>, p: impl Into<String>) -> Self {
        CanonicalPair {
            q: q.into(),
            p: p.into(),
            coeff: 1.0,
        }
    }

    pub fn with_coeff(mut self, coeff: f64) -> Self {
        self.coeff = coeff;
        self
    }
}

/// Shared surface of phase and configuration spaces.
///
/// Coordinates are grouped into units that projection legs must carry as a
/// whole: canonical pairs for phase spaces, single coordinates otherwise.
pub trait CoordinateSpace: Clone + fmt::Debug {
    fn name(&self) -> &str;
    fn units(&self) -> Vec<Vec<String>>;
    fn params(&self) -> &BTreeSet<String>;

    fn coords(&self) -> Vec<String> {
        self.units().into_iter().flatten().collect()
    }

    fn dim(&self) -> usize {
        self.coords().len()
    }

    fn has_coord(&self, name: &str) -> bool {
        self.coords().iter().any(|c| c == name)
    }

    /// Structural identity used when matching feet: same ordered units and
    /// the same per-unit data.
    fn same_shape(&self, other: &Self) -> bool;

    /// Like [`same_shape`](Self::same_shape) but ignoring unit order.
    fn same_units_unordered(&self, other: &Self) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpace {
    name: String,
    pairs: Vec<CanonicalPair>,
    params: BTreeSet<String>,
    convention: BivectorConvention,
}

fn check_distinct(space: &str, names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidSpace {
                space: space.to_string(),
                detail: format!("coordinate `{n}` appears twice"),
            });
        }
    }
    Ok(())
}

impl PhaseSpace {
    pub fn new(name: impl Into<String>, pairs: Vec<CanonicalPair>) -> Result<Self> {
        let name = name.into();
        let coords: Vec<String> = pairs.iter().flat_map(|p| [p.q.clone(), p.p.clone()]).collect();
        check_distinct(&name, &coords)?;
        if let Some(bad) = pairs.iter().find(|p| p.coeff <= 0.0 || !p.coeff.is_finite()) {
            return Err(Error::InvalidSpace {
                space: name,
                detail: format!("form coefficient {} on ({}, {}) must be positive", bad.coeff, bad.q, bad.p),
            });
        }
        Ok(PhaseSpace {
            name,
            pairs,
            params: BTreeSet::new(),
            convention: BivectorConvention::default(),
        })
    }

    /// Unit-coefficient pairs.
    pub fn standard(name: impl Into<String>, pairs: &[(&str, &str)]) -> Result<Self> {
        Self::new(name, pairs.iter().map(|(q, p)| CanonicalPair::new(*q, *p)).collect())
    }

    /// Standard `ℝ^{2n}`: pair `(q, p)` when `n = 1`, else `(q1, p1) … (qn, pn)`.
    pub fn euclidean(n: usize) -> Self {
        let pairs = if n == 1 {
            vec![CanonicalPair::new("q", "p")]
        } else {
            (1..=n).map(|i| CanonicalPair::new(format!("q{i}"), format!("p{i}"))).collect()
        };
        PhaseSpace {
            name: format!("R{}", 2 * n),
            pairs,
            params: BTreeSet::new(),
            convention: BivectorConvention::default(),
        }
    }

    /// The zero-dimensional space.
    pub fn point(name: impl Into<String>) -> Self {
        PhaseSpace {
            name: name.into(),
            pairs: Vec::new(),
            params: BTreeSet::new(),
            convention: BivectorConvention::default(),
        }
    }

    pub fn with_params<S: Into<String>>(mut self, params: impl IntoIterator<Item = S>) -> Self {
        self.params.extend(params.into_iter().map(Into::into));
        self
    }

    pub fn with_convention(mut self, convention: BivectorConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn convention(&self) -> BivectorConvention {
        self.convention
    }

    pub fn pairs(&self) -> &[CanonicalPair] {
        &self.pairs
    }

    pub fn qs(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.q.as_str())
    }

    pub fn ps(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.p.as_str())
    }

    /// Bivector coefficient of pair `i`.
    pub fn bivector_coeff(&self, i: usize) -> f64 {
        let c = self.pairs[i].coeff;
        match self.convention {
            BivectorConvention::Inverse => 1.0 / c,
            BivectorConvention::Literal => c,
        }
    }

    fn check_known(&self, e: &Expr) -> Result<()> {
        for v in e.free_vars() {
            if !self.params.contains(&v) && !self.has_coord(&v) {
                return Err(Error::UnknownCoordinate {
                    name: v,
                    space: self.name.clone(),
                });
            }
        }
        Ok(())
    }
}

impl CoordinateSpace for PhaseSpace {
    fn name(&self) -> &str {
        &self.name
    }

    fn units(&self) -> Vec<Vec<String>> {
        self.pairs.iter().map(|p| vec![p.q.clone(), p.p.clone()]).collect()
    }

    fn params(&self) -> &BTreeSet<String> {
        &self.params
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.pairs == other.pairs
    }

    fn same_units_unordered(&self, other: &Self) -> bool {
        self.pairs.len() == other.pairs.len() && self.pairs.iter().all(|p| other.pairs.contains(p))
    }
}

impl fmt::Display for PhaseSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self
            .pairs
            .iter()
            .map(|p| format!("({},{},c={})", p.q, p.p, p.coeff))
            .collect();
        write!(f, "{} [{}]", self.name, pairs.join(" "))
    }
}

/// A configuration space with a (possibly degenerate) mass metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpace {
    name: String,
    coords: Vec<String>,
    metric: Vec<Vec<Expr>>,
    params: BTreeSet<String>,
}

impl ConfigSpace {
    /// `metric` must be square over `coords` and structurally symmetric after
    /// folding. Definiteness is checked separately, since factor systems may
    /// carry massless coordinates.
    pub fn new(name: impl Into<String>, coords: Vec<String>, metric: Vec<Vec<Expr>>) -> Result<Self> {
        let name = name.into();
        check_distinct(&name, &coords)?;
        let n = coords.len();
        if metric.len() != n || metric.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSpace {
                space: name,
                detail: format!("metric must be {n}x{n}"),
            });
        }
        let metric: Vec<Vec<Expr>> = metric.iter().map(|r| r.iter().map(Expr::fold).collect()).collect();
        for i in 0..n {
            for j in 0..i {
                if metric[i][j] != metric[j][i] {
                    return Err(Error::InvalidSpace {
                        space: name,
                        detail: format!("metric is not symmetric at ({}, {})", coords[i], coords[j]),
                    });
                }
            }
        }
        Ok(ConfigSpace {
            name,
            coords,
            metric,
            params: BTreeSet::new(),
        })
    }

    /// Zero metric: coordinates without kinetic energy.
    pub fn massless(name: impl Into<String>, coords: &[&str]) -> Result<Self> {
        let n = coords.len();
        Self::new(
            name,
            coords.iter().map(|c| c.to_string()).collect(),
            vec![vec![Expr::zero(); n]; n],
        )
    }

    /// Diagonal metric.
    pub fn diagonal(name: impl Into<String>, coords: &[&str], masses: Vec<Expr>) -> Result<Self> {
        let n = coords.len();
        let mut metric = vec![vec![Expr::zero(); n]; n];
        for (i, m) in masses.into_iter().enumerate().take(n) {
            metric[i][i] = m;
        }
        Self::new(name, coords.iter().map(|c| c.to_string()).collect(), metric)
    }

    pub fn with_params<S: Into<String>>(mut self, params: impl IntoIterator<Item = S>) -> Self {
        self.params.extend(params.into_iter().map(Into::into));
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coords
    }

    pub fn metric(&self) -> &[Vec<Expr>] {
        &self.metric
    }

    pub fn metric_at(&self, at: &Binding) -> Result<Vec<Vec<f64>>> {
        self.metric
            .iter()
            .map(|r| r.iter().map(|e| e.eval(at)).collect())
            .collect()
    }

    /// First sample point where the metric fails to be positive-definite.
    pub fn definiteness_defect(&self, bounds: &SampleBox, n: usize, seed: u64) -> Result<Option<Binding>> {
        for point in bounds.points(n, seed)? {
            if !linalg::is_positive_definite(&self.metric_at(&point)?) {
                return Ok(Some(point));
            }
        }
        Ok(None)
    }
}

impl CoordinateSpace for ConfigSpace {
    fn name(&self) -> &str {
        &self.name
    }

    fn units(&self) -> Vec<Vec<String>> {
        self.coords.iter().map(|c| vec![c.clone()]).collect()
    }

    fn params(&self) -> &BTreeSet<String> {
        &self.params
    }

    fn coords(&self) -> Vec<String> {
        self.coords.clone()
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.coords == other.coords
    }

    fn same_units_unordered(&self, other: &Self) -> bool {
        self.coords.len() == other.coords.len() && self.coords.iter().all(|c| other.coords.contains(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// Every target coordinate is a distinct source coordinate and units go
    /// to units position by position (q to q, p to p).
    ProjectionRelabel,
    General,
}

/// A smooth map given by one expression per target coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    source: Vec<String>,
    target: Vec<String>,
    components: Vec<Expr>,
    kind: MapKind,
}

impl SmoothMap {
    pub fn new<S: CoordinateSpace>(
        src: &S,
        dst: &S,
        assignment: impl IntoIterator<Item = (String, Expr)>,
    ) -> Result<Self> {
        let target = dst.coords();
        let mut slots: Vec<Option<Expr>> = vec![None; target.len()];
        for (name, e) in assignment {
            let i = target.iter().position(|t| *t == name).ok_or_else(|| {
                Error::MalformedAssignment(format!("`{name}` is not a coordinate of `{}`", dst.name()))
            })?;
            if slots[i].is_some() {
                return Err(Error::MalformedAssignment(format!("`{name}` assigned twice")));
            }
            for v in e.free_vars() {
                if !src.has_coord(&v) && !src.params().contains(&v) {
                    return Err(Error::MalformedAssignment(format!(
                        "`{v}` in the component for `{name}` is not a coordinate of `{}`",
                        src.name()
                    )));
                }
            }
            slots[i] = Some(e.fold());
        }
        let mut components = Vec::with_capacity(target.len());
        for (i, slot) in slots.into_iter().enumerate() {
            components.push(slot.ok_or_else(|| {
                Error::MalformedAssignment(format!("no component for `{}`", target[i]))
            })?);
        }
        let kind = classify(src, dst, &components);
        Ok(SmoothMap {
            source: src.coords(),
            target,
            components,
            kind,
        })
    }

    pub fn identity<S: CoordinateSpace>(space: &S) -> Self {
        let coords = space.coords();
        SmoothMap {
            source: coords.clone(),
            target: coords.clone(),
            components: coords.iter().map(|c| Expr::var(c.clone())).collect(),
            kind: MapKind::ProjectionRelabel,
        }
    }

    /// Projection sending each target coordinate to the same-named source
    /// coordinate.
    pub fn projection<S: CoordinateSpace>(src: &S, dst: &S) -> Result<Self> {
        Self::new(src, dst, dst.coords().into_iter().map(|c| (c.clone(), Expr::Var(c))))
    }

    /// Projection given as `target coordinate -> source coordinate`.
    pub fn relabel<S: CoordinateSpace>(src: &S, dst: &S, names: &[(&str, &str)]) -> Result<Self> {
        Self::new(
            src,
            dst,
            names.iter().map(|(t, s)| (t.to_string(), Expr::var(*s))),
        )
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn source_coords(&self) -> &[String] {
        &self.source
    }

    pub fn target_coords(&self) -> &[String] {
        &self.target
    }

    pub fn components(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.target.iter().map(String::as_str).zip(self.components.iter())
    }

    pub fn component(&self, target: &str) -> Option<&Expr> {
        self.target.iter().position(|t| t == target).map(|i| &self.components[i])
    }

    /// `target coordinate -> source coordinate` for projection maps.
    pub fn projection_pattern(&self) -> Option<BTreeMap<String, String>> {
        if self.kind != MapKind::ProjectionRelabel {
            return None;
        }
        self.components()
            .map(|(t, e)| match e {
                Expr::Var(s) => Some((t.to_string(), s.clone())),
                _ => None,
            })
            .collect()
    }

    /// Substitution `target coordinate -> component` for pullbacks `f ∘ Φ`.
    pub fn substitution(&self) -> BTreeMap<String, Expr> {
        self.components().map(|(t, e)| (t.to_string(), e.clone())).collect()
    }

    /// Precomposes with a relabelling of the source coordinates onto `new_src`.
    pub fn reindexed<S: CoordinateSpace>(
        &self,
        renames: &BTreeMap<String, String>,
        new_src: &S,
        dst: &S,
    ) -> Result<SmoothMap> {
        Self::new(
            new_src,
            dst,
            self.components().map(|(t, e)| (t.to_string(), e.rename(renames))),
        )
    }

    /// `Φ ∘ other`: first `other`, then `self`.
    pub fn after<S: CoordinateSpace>(&self, other: &SmoothMap, src: &S, dst: &S) -> Result<SmoothMap> {
        let subst = other.substitution();
        Self::new(
            src,
            dst,
            self.components().map(|(t, e)| (t.to_string(), e.substitute(&subst))),
        )
    }
}

fn classify<S: CoordinateSpace>(src: &S, dst: &S, components: &[Expr]) -> MapKind {
    let src_units = src.units();
    let target = dst.coords();
    let image: Option<Vec<&str>> = components
        .iter()
        .map(|e| match e {
            Expr::Var(v) if src.has_coord(v) => Some(v.as_str()),
            _ => None,
        })
        .collect();
    let Some(image) = image else {
        return MapKind::General;
    };
    let distinct: BTreeSet<&str> = image.iter().copied().collect();
    if distinct.len() != image.len() {
        return MapKind::General;
    }
    let lookup: BTreeMap<&str, &str> = target.iter().map(String::as_str).zip(image).collect();
    for unit in dst.units() {
        let mapped: Vec<String> = unit.iter().map(|c| lookup[c.as_str()].to_string()).collect();
        if !src_units.contains(&mapped) {
            return MapKind::General;
        }
    }
    MapKind::ProjectionRelabel
}

/// `{f, g} = Σ_i b_i (∂f/∂q_i ∂g/∂p_i − ∂f/∂p_i ∂g/∂q_i)`.
pub fn poisson_bracket(f: &Expr, g: &Expr, space: &PhaseSpace) -> Result<Expr> {
    space.check_known(f)?;
    space.check_known(g)?;
    let mut terms = Vec::with_capacity(space.pairs.len());
    for (i, pair) in space.pairs.iter().enumerate() {
        let fq = f.diff(&pair.q);
        let fp = f.diff(&pair.p);
        let gq = g.diff(&pair.q);
        let gp = g.diff(&pair.p);
        if (fq.is_zero() || gp.is_zero()) && (fp.is_zero() || gq.is_zero()) {
            continue;
        }
        let inner = fq * gp - fp * gq;
        terms.push(Expr::Const(space.bivector_coeff(i)) * inner);
    }
    Ok(Expr::sum(terms))
}

/// Largest |{f,{g,h}} + {g,{h,f}} + {h,{f,g}}| over `n` sample points.
pub fn jacobi_residual(
    f: &Expr,
    g: &Expr,
    h: &Expr,
    space: &PhaseSpace,
    bounds: &SampleBox,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let pb = |a: &Expr, b: &Expr| poisson_bracket(a, b, space);
    let cyclic = Expr::sum([
        pb(f, &pb(g, h)?)?,
        pb(g, &pb(h, f)?)?,
        pb(h, &pb(f, g)?)?,
    ]);
    let mut worst = 0.0_f64;
    for point in bounds.points(n, seed)? {
        worst = worst.max(cyclic.eval(&point)?.abs());
    }
    Ok(worst)
}

/// Checks `{x_i, x_j}_dst ∘ Φ = {x_i ∘ Φ, x_j ∘ Φ}_src` for every pair of
/// target coordinates at `n` sample points.
pub fn is_poisson_map(
    map: &SmoothMap,
    src: &PhaseSpace,
    dst: &PhaseSpace,
    bounds: &SampleBox,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<bool> {
    Ok(poisson_defect(map, src, dst, bounds, n, tol, seed)?.is_none())
}

/// First coordinate pair and sample where the Poisson condition fails.
pub fn poisson_defect(
    map: &SmoothMap,
    src: &PhaseSpace,
    dst: &PhaseSpace,
    bounds: &SampleBox,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<Option<String>> {
    if map.target_coords().len() != dst.dim() {
        return Err(Error::MalformedAssignment(format!(
            "map has {} components, `{}` has {} coordinates",
            map.target_coords().len(),
            dst.name,
            dst.dim()
        )));
    }
    let subst = map.substitution();
    let coords = dst.coords();
    let mut checks = Vec::new();
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            let xi = Expr::var(coords[i].clone());
            let xj = Expr::var(coords[j].clone());
            let lhs = poisson_bracket(&xi, &xj, dst)?.substitute(&subst);
            let rhs = poisson_bracket(&xi.substitute(&subst), &xj.substitute(&subst), src)?;
            checks.push((i, j, lhs, rhs));
        }
    }
    for point in bounds.points(n, seed)? {
        for (i, j, lhs, rhs) in &checks {
            let a = lhs.eval(&point)?;
            let b = rhs.eval(&point)?;
            if !crate::expr::sample::within(a, b, tol) {
                return Ok(Some(format!(
                    "{{{}, {}}} is {} on the target but {} through the map",
                    coords[*i], coords[*j], a, b
                )));
            }
        }
    }
    Ok(None)
}

/// Hamilton's equations: `q̇_i = b_i ∂H/∂p_i`, `ṗ_i = −b_i ∂H/∂q_i`, in
/// coordinate order `q_1, p_1, q_2, p_2, …`.
pub fn hamiltonian_vector_field(h: &Expr, space: &PhaseSpace) -> Result<Vec<(String, Expr)>> {
    space.check_known(h)?;
    let mut out = Vec::with_capacity(space.dim());
    for (i, pair) in space.pairs.iter().enumerate() {
        let b = space.bivector_coeff(i);
        out.push((pair.q.clone(), Expr::product([Expr::Const(b), h.diff(&pair.p)])));
        out.push((pair.p.clone(), Expr::product([Expr::Const(-b), h.diff(&pair.q)])));
    }
    Ok(out)
}

/// Symbolic Jacobian `∂Φ_j/∂x_i`, rows over target coordinates.
pub fn jacobian(map: &SmoothMap) -> Vec<Vec<Expr>> {
    map.components()
        .map(|(_, e)| map.source_coords().iter().map(|x| e.diff(x)).collect())
        .collect()
}

fn rank_of(jac: &[Vec<Expr>], at: &Binding, tol: f64) -> Result<usize> {
    let values: Vec<Vec<f64>> = jac
        .iter()
        .map(|r| r.iter().map(|e| e.eval(at)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    Ok(linalg::rank(&values, tol))
}

/// Numerical rank of the Jacobian at `at`.
pub fn jacobian_rank_at(map: &SmoothMap, at: &Binding, tol: f64) -> Result<usize> {
    rank_of(&jacobian(map), at, tol)
}

/// Sample points for rank checks: the box centre, then `n - 1` seeded draws.
fn rank_sample_points(bounds: &SampleBox, n: usize, seed: u64) -> Result<Vec<Binding>> {
    let mut points = vec![bounds.center()];
    points.extend(bounds.points(n.saturating_sub(1), seed)?);
    Ok(points)
}

/// First sample where the Jacobian drops below full target rank, with the rank
/// found there.
pub fn submersion_defect(
    map: &SmoothMap,
    bounds: &SampleBox,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<Option<(usize, Binding)>> {
    let jac = jacobian(map);
    let full = map.target_coords().len();
    for point in rank_sample_points(bounds, n, seed)? {
        let r = rank_of(&jac, &point, tol)?;
        if r < full {
            return Ok(Some((r, point)));
        }
    }
    Ok(None)
}

/// Full Jacobian rank at every sample. Evidence only: sampling cannot prove
/// surjectivity of the differential everywhere.
pub fn check_submersion_samples(
    map: &SmoothMap,
    bounds: &SampleBox,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<bool> {
    Ok(submersion_defect(map, bounds, n, tol, seed)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::equal_on_samples;

    fn v(n: &str) -> Expr {
        Expr::var(n)
    }

    fn r2() -> PhaseSpace {
        PhaseSpace::standard("R2", &[("q1", "p1")]).unwrap()
    }

    #[test]
    fn canonical_bracket() {
        assert_eq!(poisson_bracket(&v("q1"), &v("p1"), &r2()).unwrap(), Expr::one());
        let b = poisson_bracket(&v("q1").pow(2), &v("p1"), &r2()).unwrap();
        assert_eq!(b.to_string(), "2*q1");
    }

    #[test]
    fn bracket_with_doubled_pair() {
        let s = PhaseSpace::new("S", vec![CanonicalPair::new("q", "p").with_coeff(2.0)]).unwrap();
        assert_eq!(poisson_bracket(&v("q"), &v("p"), &s).unwrap(), Expr::Const(0.5));
        let lit = s.clone().with_convention(BivectorConvention::Literal);
        assert_eq!(poisson_bracket(&v("q"), &v("p"), &lit).unwrap(), Expr::Const(2.0));
    }

    #[test]
    fn bracket_rejects_foreign_variables() {
        let e = poisson_bracket(&v("z"), &v("p1"), &r2());
        assert!(matches!(e, Err(Error::UnknownCoordinate { .. })));
        let with_param = r2().with_params(["k"]);
        assert!(poisson_bracket(&(v("k") * v("q1")), &v("p1"), &with_param).is_ok());
    }

    #[test]
    fn jacobi_small_cases() {
        let s = r2();
        let bx = SampleBox::uniform(["q1", "p1"], -1.0, 1.0);
        let r = jacobi_residual(&v("q1"), &v("p1"), &(v("q1") * v("p1")), &s, &bx, 20, 3).unwrap();
        assert!(r <= 1e-9);
        let one = Expr::one();
        assert_eq!(jacobi_residual(&one, &one, &one, &s, &bx, 5, 3).unwrap(), 0.0);
    }

    #[test]
    fn poisson_map_examples() {
        let r4 = PhaseSpace::standard("R4", &[("q1", "p1"), ("q2", "p2")]).unwrap();
        let r2 = r2();
        let proj = SmoothMap::projection(&r4, &r2).unwrap();
        let bx = SampleBox::uniform(r4.coords(), -1.0, 1.0);
        assert!(is_poisson_map(&proj, &r4, &r2, &bx, 100, 1e-9, 42).unwrap());

        let scaled = SmoothMap::new(&r2, &r2, [("q1".into(), 2.0 * v("q1")), ("p1".into(), v("p1"))]).unwrap();
        let bx2 = SampleBox::uniform(r2.coords(), -1.0, 1.0);
        assert!(!is_poisson_map(&scaled, &r2, &r2, &bx2, 100, 1e-9, 42).unwrap());
        assert!(is_poisson_map(&SmoothMap::identity(&r4), &r4, &r4, &bx, 10, 1e-9, 1).unwrap());
    }

    #[test]
    fn vector_fields() {
        let s = PhaseSpace::standard("S", &[("q", "p")]).unwrap();
        let h = Expr::parse("p^2/2 + q^2/2").unwrap();
        let f = hamiltonian_vector_field(&h, &s).unwrap();
        assert_eq!(f, vec![("q".into(), v("p")), ("p".into(), -v("q"))]);

        let d = PhaseSpace::new("D", vec![CanonicalPair::new("q", "p").with_coeff(2.0)]).unwrap();
        let f = hamiltonian_vector_field(&Expr::parse("p^2/2").unwrap(), &d).unwrap();
        let bx = SampleBox::uniform(["p"], -1.0, 1.0);
        assert!(equal_on_samples(&f[0].1, &Expr::parse("p/2").unwrap(), &bx, 10, 1e-12, 0).unwrap());
    }

    #[test]
    fn puck_hamilton_equations() {
        let s = PhaseSpace::standard("P", &[("r", "p1"), ("theta", "p2")])
            .unwrap()
            .with_params(["m", "M", "g", "l"]);
        let h = Expr::parse("p1^2/(2*(m+M)) + p2^2/(2*m*r^2) - M*g*(l-r)").unwrap();
        let f = hamiltonian_vector_field(&h, &s).unwrap();
        let bx = SampleBox::uniform(["r", "p1", "p2", "theta"], 0.5, 1.5)
            .with("m", 0.5, 2.0)
            .with("M", 0.5, 2.0)
            .with("g", 0.5, 2.0)
            .with("l", 0.5, 2.0);
        let expect = |s: &str| Expr::parse(s).unwrap();
        assert!(equal_on_samples(&f[0].1, &expect("p1/(m+M)"), &bx, 20, 1e-12, 0).unwrap());
        assert!(equal_on_samples(&f[1].1, &expect("p2^2/(m*r^3) - M*g"), &bx, 20, 1e-12, 0).unwrap());
        assert!(equal_on_samples(&f[2].1, &expect("p2/(m*r^2)"), &bx, 20, 1e-12, 0).unwrap());
        assert_eq!(f[3].1, Expr::zero());
    }

    #[test]
    fn submersion_checks() {
        let line = ConfigSpace::massless("L", &["x"]).unwrap();
        let square = SmoothMap::new(&line, &line, [("x".into(), v("x").pow(2))]).unwrap();
        let bx = SampleBox::uniform(["x"], -1.0, 1.0);
        assert!(!check_submersion_samples(&square, &bx, 50, 1e-9, 42).unwrap());
        let (rank, at) = submersion_defect(&square, &bx, 50, 1e-9, 42).unwrap().unwrap();
        assert_eq!((rank, at.get("x")), (0, Some(0.0)));

        let r4 = PhaseSpace::standard("R4", &[("q1", "p1"), ("q2", "p2")]).unwrap();
        let proj = SmoothMap::projection(&r4, &r2()).unwrap();
        let b4 = SampleBox::uniform(r4.coords(), -1.0, 1.0);
        assert!(check_submersion_samples(&proj, &b4, 50, 1e-9, 42).unwrap());

        let plane = ConfigSpace::massless("Q", &["q", "p"]).unwrap();
        let sum = SmoothMap::new(&plane, &line, [("x".into(), v("q") + v("p"))]).unwrap();
        let b2 = SampleBox::uniform(["q", "p"], -1.0, 1.0);
        assert_eq!(jacobian_rank_at(&sum, &b2.center(), 1e-9).unwrap(), 1);
        assert!(check_submersion_samples(&sum, &b2, 50, 1e-9, 42).unwrap());
    }

    #[test]
    fn map_classification() {
        let r4 = PhaseSpace::standard("R4", &[("q1", "p1"), ("q2", "p2")]).unwrap();
        let swap = SmoothMap::relabel(&r4, &r2(), &[("q1", "q2"), ("p1", "p2")]).unwrap();
        assert_eq!(swap.kind(), MapKind::ProjectionRelabel);
        let crossed = SmoothMap::relabel(&r4, &r2(), &[("q1", "q1"), ("p1", "p2")]).unwrap();
        assert_eq!(crossed.kind(), MapKind::General);
        let flipped = SmoothMap::relabel(&r4, &r2(), &[("q1", "p1"), ("p1", "q1")]).unwrap();
        assert_eq!(flipped.kind(), MapKind::General);
    }

    #[test]
    fn malformed_assignments() {
        let r2 = r2();
        assert!(matches!(
            SmoothMap::new(&r2, &r2, [("q1".into(), v("q1"))]),
            Err(Error::MalformedAssignment(_))
        ));
        assert!(matches!(
            SmoothMap::new(&r2, &r2, [("q1".into(), v("q1")), ("q1".into(), v("p1"))]),
            Err(Error::MalformedAssignment(_))
        ));
        assert!(matches!(
            SmoothMap::new(&r2, &r2, [("q1".into(), v("z")), ("p1".into(), v("p1"))]),
            Err(Error::MalformedAssignment(_))
        ));
    }

    #[test]
    fn invalid_spaces() {
        assert!(PhaseSpace::standard("X", &[("q", "q")]).is_err());
        assert!(PhaseSpace::new("X", vec![CanonicalPair::new("q", "p").with_coeff(0.0)]).is_err());
        let asym = vec![vec![v("m"), Expr::one()], vec![Expr::zero(), v("m")]];
        assert!(ConfigSpace::new("C", vec!["a".into(), "b".into()], asym).is_err());
    }
}

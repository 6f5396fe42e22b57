//! Open Hamiltonian systems: spans of phase spaces decorated with a
//! Hamiltonian on the apex.
//!
//! Composition glues the spans and adds the Hamiltonians pulled back along
//! the projections from the glued apex, `H'' = H∘π + H'∘π'`. The identity
//! system carries `H = 0`, the unit for that sum.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{equal_on_samples, Expr, SampleBox};
use crate::geometry::{hamiltonian_vector_field, poisson_bracket, CoordinateSpace, PhaseSpace};
use crate::span::{
    find_isomorphism, identity_span, product_span, pullback, validate_span, Gluing, SampleOptions, Span, SpanIso,
    Verdict,
};

#[derive(Debug, Clone, PartialEq)]
pub struct OpenHamiltonianSystem {
    name: String,
    span: Span<PhaseSpace>,
    hamiltonian: Expr,
}

pub(crate) fn check_vars<S: CoordinateSpace>(e: &Expr, space: &S) -> Result<()> {
    for v in e.free_vars() {
        if !space.has_coord(&v) && !space.params().contains(&v) {
            return Err(Error::UnknownCoordinate {
                name: v,
                space: space.name().to_string(),
            });
        }
    }
    Ok(())
}

impl OpenHamiltonianSystem {
    pub fn new(name: impl Into<String>, span: Span<PhaseSpace>, hamiltonian: Expr) -> Result<Self> {
        check_vars(&hamiltonian, span.apex())?;
        Ok(OpenHamiltonianSystem {
            name: name.into(),
            span,
            hamiltonian: hamiltonian.fold(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same system with every space using `convention` for its bivector.
    pub fn with_convention(mut self, convention: crate::geometry::BivectorConvention) -> Self {
        self.span = self.span.map_spaces(|s| s.with_convention(convention));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn span(&self) -> &Span<PhaseSpace> {
        &self.span
    }

    pub fn apex(&self) -> &PhaseSpace {
        self.span.apex()
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    /// Validates both legs as surjective Poisson maps.
    pub fn validate(&self, opts: &SampleOptions) -> Result<(Verdict, Verdict)> {
        validate_span(&self.span, opts)
    }

    /// Hamilton's equations on the apex, in coordinate order.
    pub fn vector_field(&self) -> Result<Vec<(String, Expr)>> {
        hamiltonian_vector_field(&self.hamiltonian, self.apex())
    }

    /// `{f, H}`: the rate of change of `f` along the flow.
    pub fn time_derivative(&self, f: &Expr) -> Result<Expr> {
        poisson_bracket(f, &self.hamiltonian, self.apex())
    }
}

/// The system `M ← M → M` with `H = 0`.
pub fn identity_system(space: &PhaseSpace) -> OpenHamiltonianSystem {
    OpenHamiltonianSystem {
        name: format!("id_{}", space.name()),
        span: identity_span(space),
        hamiltonian: Expr::zero(),
    }
}

/// Composite system together with the gluing of its apex.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite<T> {
    pub system: T,
    pub gluing: Gluing,
}

/// `b ∘ a` in diagrammatic order: `a`'s right foot is glued to `b`'s left foot.
pub fn compose(a: &OpenHamiltonianSystem, b: &OpenHamiltonianSystem) -> Result<OpenHamiltonianSystem> {
    Ok(compose_with_gluing(a, b)?.system)
}

pub fn compose_with_gluing(a: &OpenHamiltonianSystem, b: &OpenHamiltonianSystem) -> Result<Composite<OpenHamiltonianSystem>> {
    let pb = pullback(&a.span, &b.span)?;
    let h = a.hamiltonian.rename(&pb.gluing.left_rename) + b.hamiltonian.rename(&pb.gluing.right_rename);
    let system = OpenHamiltonianSystem::new(format!("{}_{}", a.name, b.name), pb.span, h)?;
    Ok(Composite {
        system,
        gluing: pb.gluing,
    })
}

/// Parallel juxtaposition: product feet and apex, `H = H_a + H_b`.
pub fn tensor(a: &OpenHamiltonianSystem, b: &OpenHamiltonianSystem) -> Result<OpenHamiltonianSystem> {
    let (span, g) = product_span(&a.span, &b.span)?;
    let h = a.hamiltonian.rename(&g.left_rename) + b.hamiltonian.rename(&g.right_rename);
    OpenHamiltonianSystem::new(format!("{}_{}", a.name, b.name), span, h)
}

/// Isomorphism of underlying spans whose relabelling also matches the
/// Hamiltonians at sampled points. Coordinates are sampled in `[-1, 1]`
/// unless `bounds` says otherwise.
pub fn systems_isomorphic(
    a: &OpenHamiltonianSystem,
    b: &OpenHamiltonianSystem,
    bounds: &SampleBox,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<Option<SpanIso>> {
    let mut bounds = bounds.clone();
    for c in a.apex().coords() {
        bounds = bounds.with_default(&c, -1.0, 1.0);
    }
    find_isomorphism(&a.span, &b.span, |iso| {
        equal_on_samples(&a.hamiltonian, &iso.pull_back(&b.hamiltonian), &bounds, n, tol, seed)
    })
}

/// Renames apex coordinates of `sys` (a relabelling of the apex only).
pub fn relabel_apex(sys: &OpenHamiltonianSystem, renames: &BTreeMap<String, String>) -> Result<OpenHamiltonianSystem> {
    let pairs = sys
        .apex()
        .pairs()
        .iter()
        .map(|p| {
            let q = renames.get(&p.q).unwrap_or(&p.q);
            let pp = renames.get(&p.p).unwrap_or(&p.p);
            crate::geometry::CanonicalPair::new(q.clone(), pp.clone()).with_coeff(p.coeff)
        })
        .collect();
    let apex = PhaseSpace::new(sys.apex().name(), pairs)?
        .with_params(sys.apex().params().iter().cloned())
        .with_convention(sys.apex().convention());
    let span = sys.span();
    let left = span.left_leg().reindexed(renames, &apex, span.left_foot())?;
    let right = span.right_leg().reindexed(renames, &apex, span.right_foot())?;
    let span = Span::new(span.left_foot().clone(), apex, span.right_foot().clone(), left, right)?;
    OpenHamiltonianSystem::new(sys.name(), span, sys.hamiltonian.rename(renames))
}

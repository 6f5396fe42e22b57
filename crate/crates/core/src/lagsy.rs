//! Open Lagrangian systems: spans of configuration spaces with a mass metric
//! on the apex and a potential decoration.
//!
//! The Lagrangian is `L = ½ q̇ᵀ M(q) q̇ − V(q)`. Composition sums the metrics
//! on the glued apex (shared blocks add) and adds the pulled-back potentials,
//! so the composite Lagrangian is the sum of the pulled-back Lagrangians.

use crate::error::{Error, Result};
use crate::expr::{Expr, SampleBox};
use crate::geometry::{ConfigSpace, CoordinateSpace};
use crate::hamsy::{check_vars, Composite};
use crate::linalg;
use crate::span::{identity_span, pullback, validate_span, SampleOptions, Span, Verdict};

pub const VELOCITY_SUFFIX: &str = "_dot";
pub const MOMENTUM_PREFIX: &str = "p_";

pub fn velocity_name(q: &str) -> String {
    format!("{q}{VELOCITY_SUFFIX}")
}

pub fn momentum_name(q: &str) -> String {
    format!("{MOMENTUM_PREFIX}{q}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenLagrangianSystem {
    name: String,
    span: Span<ConfigSpace>,
    potential: Expr,
}

impl OpenLagrangianSystem {
    /// Rejects potentials over unknown names and apexes whose derived
    /// velocity names clash with a coordinate or parameter.
    pub fn new(name: impl Into<String>, span: Span<ConfigSpace>, potential: Expr) -> Result<Self> {
        let apex = span.apex();
        check_vars(&potential, apex)?;
        for q in apex.coord_names() {
            let dot = velocity_name(q);
            if apex.has_coord(&dot) || apex.params().contains(&dot) {
                return Err(Error::InvalidSpace {
                    space: apex.name().to_string(),
                    detail: format!("velocity name `{dot}` is already taken"),
                });
            }
        }
        Ok(OpenLagrangianSystem {
            name: name.into(),
            span,
            potential: potential.fold(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn span(&self) -> &Span<ConfigSpace> {
        &self.span
    }

    pub fn apex(&self) -> &ConfigSpace {
        self.span.apex()
    }

    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn metric(&self) -> &[Vec<Expr>] {
        self.apex().metric()
    }

    pub fn validate(&self, opts: &SampleOptions) -> Result<(Verdict, Verdict)> {
        validate_span(&self.span, opts)
    }

    /// Indices of coordinates with kinetic energy: those whose metric row is
    /// not structurally zero.
    pub fn massive_indices(&self) -> Vec<usize> {
        self.metric()
            .iter()
            .enumerate()
            .filter(|(_, row)| row.iter().any(|e| !e.is_zero()))
            .map(|(i, _)| i)
            .collect()
    }

    /// First sample where the massive block of the metric is not
    /// positive-definite. Coordinates default to `[-1, 1]`.
    pub fn metric_defect(&self, opts: &SampleOptions) -> Result<Option<crate::expr::Binding>> {
        let idx = self.massive_indices();
        let mut bounds: SampleBox = opts.bounds.clone();
        for c in self.apex().coord_names() {
            bounds = bounds.with_default(c, -1.0, 1.0);
        }
        for point in bounds.points(opts.samples, opts.seed)? {
            let full = self.apex().metric_at(&point)?;
            let block: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| full[i][j]).collect()).collect();
            if !linalg::is_positive_definite(&block) {
                return Ok(Some(point));
            }
        }
        Ok(None)
    }
}

/// `L = ½ Σ M_ij q̇_i q̇_j − V` over coordinates, velocities and parameters.
pub fn lagrangian_of(s: &OpenLagrangianSystem) -> Expr {
    let names = s.apex().coord_names();
    let mut terms = Vec::new();
    for (i, row) in s.metric().iter().enumerate() {
        for (j, m) in row.iter().enumerate().skip(i) {
            if m.is_zero() {
                continue;
            }
            let weight = if i == j { 0.5 } else { 1.0 };
            let vi = Expr::var(velocity_name(&names[i]));
            let vj = Expr::var(velocity_name(&names[j]));
            let vel = if i == j { vi.pow(2) } else { vi * vj };
            terms.push(Expr::product([Expr::Const(weight), m.clone(), vel]));
        }
    }
    terms.push(-s.potential.clone());
    Expr::sum(terms)
}

/// Conjugate momenta `p_j = ∂L/∂q̇_j = Σ_k M_jk q̇_k`, named `p_<coord>`.
pub fn euler_lagrange_momenta(s: &OpenLagrangianSystem) -> Vec<(String, Expr)> {
    let names = s.apex().coord_names();
    s.metric()
        .iter()
        .zip(names)
        .map(|(row, q)| {
            let p = Expr::sum(
                row.iter()
                    .zip(names)
                    .filter(|(m, _)| !m.is_zero())
                    .map(|(m, k)| m.clone() * Expr::var(velocity_name(k))),
            );
            (momentum_name(q), p)
        })
        .collect()
}

/// The system `Q ← Q → Q` with zero metric and `V = 0`.
pub fn identity_system(space: &ConfigSpace) -> Result<OpenLagrangianSystem> {
    let names: Vec<&str> = space.coord_names().iter().map(String::as_str).collect();
    let flat = ConfigSpace::massless(space.name(), &names)?.with_params(space.params().iter().cloned());
    Ok(OpenLagrangianSystem {
        name: format!("id_{}", space.name()),
        span: identity_span(&flat),
        potential: Expr::zero(),
    })
}

pub fn compose(a: &OpenLagrangianSystem, b: &OpenLagrangianSystem) -> Result<OpenLagrangianSystem> {
    Ok(compose_with_gluing(a, b)?.system)
}

pub fn compose_with_gluing(a: &OpenLagrangianSystem, b: &OpenLagrangianSystem) -> Result<Composite<OpenLagrangianSystem>> {
    let pb = pullback(&a.span, &b.span)?;
    let v = a.potential.rename(&pb.gluing.left_rename) + b.potential.rename(&pb.gluing.right_rename);
    let system = OpenLagrangianSystem::new(format!("{}_{}", a.name, b.name), pb.span, v)?;
    Ok(Composite {
        system,
        gluing: pb.gluing,
    })
}

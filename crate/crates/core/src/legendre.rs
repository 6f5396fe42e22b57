//! The Legendre transform from open Lagrangian to open Hamiltonian systems.
//!
//! Each coordinate `q` gains a conjugate momentum `p_q` with form
//! coefficient 1. With `p = M q̇` the Hamiltonian is
//! `H = ½ pᵀ M⁻¹ p + V`, where the inverse is taken symbolically over the
//! coordinates that carry mass. Massless coordinates contribute no kinetic
//! term.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{Binding, Expr, SampleBox};
use crate::geometry::{CanonicalPair, ConfigSpace, CoordinateSpace, PhaseSpace, SmoothMap};
use crate::hamsy::{self, OpenHamiltonianSystem};
use crate::lagsy::{self, euler_lagrange_momenta, lagrangian_of, momentum_name, velocity_name, OpenLagrangianSystem};
use crate::span::{SampleOptions, Span};

#[derive(Debug, Clone, PartialEq)]
pub struct LegendreResult {
    pub ham: OpenHamiltonianSystem,
    /// `p_q = Σ M_qk q̇_k` for every coordinate.
    pub momentum_map: Vec<(String, Expr)>,
}

/// The cotangent phase space of a configuration space.
pub fn cotangent(space: &ConfigSpace) -> Result<PhaseSpace> {
    let pairs = space
        .coord_names()
        .iter()
        .map(|q| {
            let p = momentum_name(q);
            if space.has_coord(&p) || space.params().contains(&p) {
                return Err(Error::InvalidSpace {
                    space: space.name().to_string(),
                    detail: format!("momentum name `{p}` is already taken"),
                });
            }
            Ok(CanonicalPair::new(q.clone(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseSpace::new(space.name(), pairs)?.with_params(space.params().iter().cloned()))
}

/// Cotangent lift of a projection leg: `(q, p_q)` maps to `(t, p_t)`.
fn lift_leg(leg: &SmoothMap, apex: &PhaseSpace, foot: &PhaseSpace) -> Result<SmoothMap> {
    let pattern = leg
        .projection_pattern()
        .ok_or_else(|| Error::NonProjectionLeg(format!("leg into `{}`", foot.name())))?;
    let mut assignment = Vec::new();
    for (t, s) in pattern {
        assignment.push((momentum_name(&t), Expr::var(momentum_name(&s))));
        assignment.push((t, Expr::var(s)));
    }
    SmoothMap::new(apex, foot, assignment)
}

fn determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone(),
        n => Expr::sum((0..n).filter(|&j| !m[0][j].is_zero()).map(|j| {
            let term = m[0][j].clone() * determinant(&minor(m, 0, j));
            if j % 2 == 0 {
                term
            } else {
                -term
            }
        })),
    }
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

/// Symbolic inverse by adjugate over determinant.
fn inverse(m: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![Expr::one() / m[0][0].clone()]];
    }
    let det = determinant(m);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let cof = determinant(&minor(m, j, i));
                    let cof = if (i + j) % 2 == 0 { cof } else { -cof };
                    (cof / det.clone()).fold()
                })
                .collect()
        })
        .collect()
}

/// Groups the massive coordinates into blocks coupled by structurally
/// nonzero off-diagonal entries.
fn blocks(metric: &[Vec<Expr>], massive: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut seen = vec![false; metric.len()];
    for &start in massive {
        if seen[start] {
            continue;
        }
        let mut block = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < block.len() {
            let i = block[k];
            for &j in massive {
                if !seen[j] && !metric[i][j].is_zero() {
                    seen[j] = true;
                    block.push(j);
                }
            }
            k += 1;
        }
        block.sort_unstable();
        out.push(block);
    }
    out
}

/// `½ pᵀ M⁻¹ p` over the massive coordinates.
pub fn kinetic_hamiltonian(space: &ConfigSpace, massive: &[usize]) -> Expr {
    let metric = space.metric();
    let names = space.coord_names();
    let p = |i: usize| Expr::var(momentum_name(&names[i]));
    let mut terms = Vec::new();
    for block in blocks(metric, massive) {
        if let [i] = block[..] {
            terms.push(p(i).pow(2) / (2.0 * metric[i][i].clone()));
            continue;
        }
        let sub: Vec<Vec<Expr>> = block
            .iter()
            .map(|&i| block.iter().map(|&j| metric[i][j].clone()).collect())
            .collect();
        let inv = inverse(&sub);
        for (a, &i) in block.iter().enumerate() {
            for (b, &j) in block.iter().enumerate().skip(a) {
                if inv[a][b].is_zero() {
                    continue;
                }
                let weight = if a == b { 0.5 } else { 1.0 };
                let pp = if a == b { p(i).pow(2) } else { p(i) * p(j) };
                terms.push(Expr::product([Expr::Const(weight), inv[a][b].clone(), pp]));
            }
        }
    }
    Expr::sum(terms)
}

/// Legendre transform of one system. The massive block of the metric must
/// be positive-definite at every sample of `opts`.
pub fn to_hamiltonian(s: &OpenLagrangianSystem, opts: &SampleOptions) -> Result<LegendreResult> {
    if let Some(point) = s.metric_defect(opts)? {
        let at: Vec<String> = s
            .apex()
            .coord_names()
            .iter()
            .filter_map(|c| point.get(c).map(|v| format!("{c}={v}")))
            .collect();
        return Err(Error::SingularMetric(format!(
            "metric of `{}` is not positive-definite at {}",
            s.apex().name(),
            at.join(", ")
        )));
    }
    let span = s.span();
    let apex = cotangent(span.apex())?;
    let lf = cotangent(span.left_foot())?;
    let rf = cotangent(span.right_foot())?;
    let left = lift_leg(span.left_leg(), &apex, &lf)?;
    let right = lift_leg(span.right_leg(), &apex, &rf)?;
    let h = kinetic_hamiltonian(span.apex(), &s.massive_indices()) + s.potential().clone();
    let ham = OpenHamiltonianSystem::new(s.name(), Span::new(lf, apex, rf, left, right)?, h)?;
    Ok(LegendreResult {
        ham,
        momentum_map: euler_lagrange_momenta(s),
    })
}

/// Default sampling box for `(q, q̇)` or `(q, p)`: whatever `opts` fixes,
/// everything else of `names` in `[-1, 1]`.
fn with_defaults<'a>(bounds: &SampleBox, names: impl IntoIterator<Item = &'a String>) -> SampleBox {
    let mut b = bounds.clone();
    for n in names {
        b = b.with_default(n, -1.0, 1.0);
    }
    b
}

/// Max over samples of `|H(q, M q̇) + L(q, q̇) − (M q̇)·q̇|`.
pub fn legendre_identity_residual(s: &OpenLagrangianSystem, r: &LegendreResult, opts: &SampleOptions) -> Result<f64> {
    let coords = s.apex().coord_names();
    let vels: Vec<String> = coords.iter().map(|q| velocity_name(q)).collect();
    let bounds = with_defaults(&opts.bounds, coords.iter().chain(&vels));
    let subst: BTreeMap<String, Expr> = r.momentum_map.iter().cloned().collect();
    let h_of_v = r.ham.hamiltonian().substitute(&subst);
    let l = lagrangian_of(s);
    let pairing = Expr::sum(
        r.momentum_map
            .iter()
            .zip(&vels)
            .map(|((_, p), v)| p.clone() * Expr::var(v.clone())),
    );
    let residual = h_of_v + l - pairing;
    let mut worst = 0.0_f64;
    for point in bounds.points(opts.samples, opts.seed)? {
        worst = worst.max(residual.eval(&point)?.abs());
    }
    Ok(worst)
}

/// Compose-then-transform against transform-then-compose: max over phase
/// space samples of `|H(𝓛(b∘a)) − H(𝓛b ∘ 𝓛a)|`. Both apexes have the same
/// unit layout, so coordinates are identified by position.
pub fn functor_discrepancy(a: &OpenLagrangianSystem, b: &OpenLagrangianSystem, opts: &SampleOptions) -> Result<f64> {
    let glued = lagsy::compose(a, b)?;
    let first = to_hamiltonian(&glued, opts)?.ham;
    let second = hamsy::compose(&to_hamiltonian(a, opts)?.ham, &to_hamiltonian(b, opts)?.ham)?;
    hamiltonian_gap(&first, &second, opts)
}

/// Max over samples of `|H_a − H_b|` after identifying apex coordinates by
/// position.
pub fn hamiltonian_gap(a: &OpenHamiltonianSystem, b: &OpenHamiltonianSystem, opts: &SampleOptions) -> Result<f64> {
    let ca = a.apex().coords();
    let cb = b.apex().coords();
    if ca.len() != cb.len() {
        return Err(Error::FootMismatch {
            left: a.apex().name().to_string(),
            right: b.apex().name().to_string(),
        });
    }
    let to_a: BTreeMap<String, String> = cb.into_iter().zip(ca.iter().cloned()).collect();
    let hb = b.hamiltonian().rename(&to_a);
    let bounds = with_defaults(&opts.bounds, ca.iter());
    let mut worst = 0.0_f64;
    for point in bounds.points(opts.samples, opts.seed)? {
        let x = a.hamiltonian().eval(&point)?;
        let y = hb.eval(&point)?;
        worst = worst.max((x - y).abs());
    }
    Ok(worst)
}

/// Evaluates a velocity vector into momenta at a point.
pub fn momenta_at(r: &LegendreResult, at: &Binding) -> Result<Vec<(String, f64)>> {
    r.momentum_map
        .iter()
        .map(|(p, e)| Ok((p.clone(), e.eval(at)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::equal_on_samples;
    use crate::span::identity_span;

    fn v(n: &str) -> Expr {
        Expr::var(n)
    }

    fn line_system(name: &str, mass: Option<&str>, pot: Expr) -> OpenLagrangianSystem {
        let params = ["m", "M", "k"];
        let pt = ConfigSpace::massless("Pt", &[]).unwrap().with_params(params);
        let line = ConfigSpace::massless("Line", &["r"]).unwrap().with_params(params);
        let apex = match mass {
            Some(m) => ConfigSpace::diagonal(name, &["r"], vec![v(m)]).unwrap(),
            None => ConfigSpace::massless(name, &["r"]).unwrap(),
        }
        .with_params(params);
        OpenLagrangianSystem::new(name, Span::from_projections(pt, apex, line).unwrap(), pot).unwrap()
    }

    fn mirrored(s: &OpenLagrangianSystem) -> OpenLagrangianSystem {
        let span = s.span();
        let flipped = Span::new(
            span.right_foot().clone(),
            span.apex().clone(),
            span.left_foot().clone(),
            span.right_leg().clone(),
            span.left_leg().clone(),
        )
        .unwrap();
        OpenLagrangianSystem::new(s.name(), flipped, s.potential().clone()).unwrap()
    }

    fn opts() -> SampleOptions {
        SampleOptions {
            bounds: SampleBox::new().with("m", 0.5, 2.0).with("M", 0.5, 2.0).with("k", 0.5, 2.0),
            samples: 100,
            tol: 1e-9,
            seed: 42,
        }
    }

    #[test]
    fn oscillator_pair() {
        let x = ConfigSpace::diagonal("X", &["q"], vec![v("m")]).unwrap().with_params(["m", "k"]);
        let s = OpenLagrangianSystem::new("osc", identity_span(&x), 0.5 * v("k") * v("q").pow(2)).unwrap();
        let r = to_hamiltonian(&s, &opts()).unwrap();
        let oracle = v("p_q").pow(2) / (2.0 * v("m")) + 0.5 * v("k") * v("q").pow(2);
        let b = SampleBox::uniform(["q", "p_q"], -1.0, 1.0).with("m", 0.5, 2.0).with("k", 0.5, 2.0);
        assert!(equal_on_samples(r.ham.hamiltonian(), &oracle, &b, 50, 1e-12, 0).unwrap());
        assert!(legendre_identity_residual(&s, &r, &opts()).unwrap() < 1e-12);
        let pairs = r.ham.apex().pairs();
        assert_eq!((pairs[0].q.as_str(), pairs[0].p.as_str(), pairs[0].coeff), ("q", "p_q", 1.0));

        let shifted = OpenLagrangianSystem::new("osc", identity_span(&x), 0.5 * v("k") * v("q").pow(2) + 3.0).unwrap();
        let h2 = to_hamiltonian(&shifted, &opts()).unwrap().ham.hamiltonian().clone();
        assert!(equal_on_samples(&h2, &(oracle + 3.0), &b, 50, 1e-12, 0).unwrap());
    }

    #[test]
    fn coupled_block_inverts() {
        let metric = vec![vec![v("a"), v("c")], vec![v("c"), v("b")]];
        let x = ConfigSpace::new("X", vec!["x".into(), "y".into()], metric).unwrap().with_params(["a", "b", "c"]);
        let s = OpenLagrangianSystem::new("s", identity_span(&x), Expr::zero()).unwrap();
        let mut o = opts();
        o.bounds = SampleBox::new().with("a", 2.0, 3.0).with("b", 2.0, 3.0).with("c", -1.0, 1.0);
        let r = to_hamiltonian(&s, &o).unwrap();
        assert!(legendre_identity_residual(&s, &r, &o).unwrap() < 1e-12);
        let three = ConfigSpace::new(
            "Y",
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                vec![v("a"), v("c"), Expr::zero()],
                vec![v("c"), v("b"), v("c")],
                vec![Expr::zero(), v("c"), v("a")],
            ],
        )
        .unwrap()
        .with_params(["a", "b", "c"]);
        let s3 = OpenLagrangianSystem::new("s3", identity_span(&three), Expr::zero()).unwrap();
        let r3 = to_hamiltonian(&s3, &o).unwrap();
        assert!(legendre_identity_residual(&s3, &r3, &o).unwrap() < 1e-12);
    }

    #[test]
    fn indefinite_metric_rejected() {
        let x = ConfigSpace::diagonal("X", &["q"], vec![Expr::constant(-1.0)]).unwrap();
        let s = OpenLagrangianSystem::new("s", identity_span(&x), Expr::zero()).unwrap();
        assert!(matches!(to_hamiltonian(&s, &opts()), Err(Error::SingularMetric(_))));
    }

    #[test]
    fn discrepancy_examples() {
        let massive = line_system("A", Some("m"), Expr::zero());
        let massless = mirrored(&line_system("B", None, 0.5 * v("k") * v("r").pow(2)));
        assert!(functor_discrepancy(&massive, &massless, &opts()).unwrap() <= 1e-9);

        let other = mirrored(&line_system("B", Some("m"), Expr::zero()));
        let gap = functor_discrepancy(&massive, &other, &opts()).unwrap();
        assert!(gap > 0.0);
        // p²/(4m) after gluing against p²/m summed: gap is 3p²/(4m)
        let mut o = opts();
        o.bounds = o.bounds.with("m", 1.0, 1.0 + 1e-12).with("r", 0.0, 1.0).with("p_r", 1.0, 1.0 + 1e-12);
        let gap = functor_discrepancy(&massive, &other, &o).unwrap();
        assert!((gap - 0.75).abs() < 1e-9, "{gap}");
    }
}

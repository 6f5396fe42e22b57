//! Three masses and two springs built as open Hamiltonian systems and glued
//! over the shared middle mass.
//!
//! ```text
//! cargo run --example springs
//! ```

use openmech::dynamics::{conserved_residual, energy_drift, simulate, IntegratorConfig, MethodChoice};
use openmech::expr::{Binding, Expr};
use openmech::geometry::{CoordinateSpace, PhaseSpace};
use openmech::hamsy::{compose_with_gluing, OpenHamiltonianSystem};
use openmech::span::{validate_span, SampleOptions, Span};

fn spring(name: &str, a: &str, b: &str) -> openmech::Result<OpenHamiltonianSystem> {
    let foot = |n: &str| PhaseSpace::standard(n.to_uppercase(), &[(&format!("q{n}"), &format!("p{n}"))]);
    let apex = PhaseSpace::standard(
        format!("{}{}", a.to_uppercase(), b.to_uppercase()),
        &[(&format!("q{a}"), &format!("p{a}")), (&format!("q{b}"), &format!("p{b}"))],
    )?;
    let h = Expr::parse(&format!("p{a}^2/(2*m{a}) + p{b}^2/(2*m{b}) + 1/2*k*(q{a} - q{b})^2"))?;
    let params = [format!("m{a}"), format!("m{b}"), "k".to_string()];
    let span = Span::from_projections(foot(a)?, apex, foot(b)?)?.map_spaces(|s| s.with_params(params.clone()));
    OpenHamiltonianSystem::new(name, span, h)
}

fn main() -> openmech::Result<()> {
    let s1 = spring("S1", "A", "B")?;
    let s2 = spring("S2", "B", "C")?;
    let (l, r) = validate_span(s1.span(), &SampleOptions::default())?;
    println!("S1 legs: {l}, {r}");

    let glued = compose_with_gluing(&s1, &s2)?;
    let s12 = glued.system;
    println!("apex {}", s12.apex());
    println!("shared pairs: {}", glued.gluing.shared_count());
    println!("H = {}", s12.hamiltonian());

    let params: Binding = [("mA", 1.0), ("mB", 2.0), ("mC", 1.0), ("k", 1.0)].into_iter().collect();
    let init: Binding = [("qA", -1.0), ("qB", 0.0), ("qC", 1.5)].into_iter().collect();
    let init = s12.apex().coords().iter().map(|c| (c.clone(), init.get(c).unwrap_or(0.0))).collect();
    let cfg = IntegratorConfig::new(MethodChoice::Auto, 1e-3, 10.0).with_params(params);
    let tr = simulate(&s12, &init, &cfg, &[], &[])?;
    println!("method {}, {} samples", tr.method, tr.len());
    println!("energy drift {:e}", energy_drift(&tr, s12.hamiltonian())?);
    // the middle pair has form coefficient 2, so its momentum counts twice
    let momentum = Expr::parse("pA + 2*pB + pC")?;
    println!("total momentum residual {:e}", conserved_residual(&tr, &momentum)?);
    Ok(())
}

//! A puck on a table tied through a hole to a hanging block: Lagrangian
//! gluing, the Legendre transform, and conservation of angular momentum.
//!
//! ```text
//! cargo run --example puck
//! ```

use openmech::dynamics::{conserved_residual, energy_drift, simulate, IntegratorConfig, Method, MethodChoice};
use openmech::expr::{Binding, Expr};
use openmech::geometry::ConfigSpace;
use openmech::lagsy::{self, euler_lagrange_momenta, lagrangian_of, OpenLagrangianSystem};
use openmech::legendre::{functor_discrepancy, to_hamiltonian};
use openmech::span::{SampleOptions, Span};

const PARAMS: [&str; 4] = ["m", "M", "g", "l"];

fn space(name: &str, coords: &[&str], metric: &[&[&str]]) -> openmech::Result<ConfigSpace> {
    let metric = metric
        .iter()
        .map(|row| row.iter().map(|e| Expr::parse(e)).collect())
        .collect::<openmech::Result<Vec<Vec<Expr>>>>()?;
    Ok(ConfigSpace::new(name, coords.iter().map(|c| c.to_string()).collect(), metric)?.with_params(PARAMS))
}

fn system(name: &str, l: &ConfigSpace, apex: ConfigSpace, r: &ConfigSpace, v: &str) -> openmech::Result<OpenLagrangianSystem> {
    OpenLagrangianSystem::new(name, Span::from_projections(l.clone(), apex, r.clone())?, Expr::parse(v)?)
}

fn main() -> openmech::Result<()> {
    let pt = space("Pt", &[], &[])?;
    let line = space("Line", &["r"], &[&["0"]])?;
    let puck = system("puck", &pt, space("Plane", &["r", "theta"], &[&["m", "0"], &["0", "m*r^2"]])?, &line, "0")?;
    let string = system("string", &line, space("String", &["r"], &[&["0"]])?, &line, "0")?;
    let block = system("block", &line, space("Block", &["r"], &[&["M"]])?, &pt, "-M*g*(l - r)")?;

    let psb = lagsy::compose(&lagsy::compose(&puck, &string)?, &block)?;
    println!("L = {}", lagrangian_of(&psb));
    for (p, e) in euler_lagrange_momenta(&psb) {
        println!("{p} = {e}");
    }

    let mut opts = SampleOptions::default();
    let params: Binding = PARAMS.iter().map(|p| (*p, 1.0)).collect();
    for p in PARAMS {
        opts.bounds.set(p, 1.0, 1.0);
    }
    let h = to_hamiltonian(&psb, &opts)?.ham;
    println!("H = {}", h.hamiltonian());
    println!("puck*string discrepancy {:e}", functor_discrepancy(&puck, &string, &opts)?);

    let init: Binding = [("r", 0.5), ("theta", 0.0), ("p_r", 0.0), ("p_theta", 0.3)].into_iter().collect();
    let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 1e-3, 10.0).with_params(params);
    let tr = simulate(&h, &init, &cfg, &[], &[])?;
    println!("r(10) = {:.6}", tr.value(tr.len() - 1, "r").unwrap_or(f64::NAN));
    println!("energy drift {:e}", energy_drift(&tr, h.hamiltonian())?);
    println!("p_theta residual {:e}", conserved_residual(&tr, &Expr::var("p_theta"))?);
    Ok(())
}

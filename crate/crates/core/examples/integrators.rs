//! RK4 against Störmer-Verlet on the harmonic oscillator: accuracy, energy
//! behaviour, and time reversal.
//!
//! ```text
//! cargo run --example integrators
//! ```

use openmech::dynamics::{energy_drift, simulate, simulate_batch, IntegratorConfig, Method, MethodChoice};
use openmech::expr::{Binding, Expr};
use openmech::geometry::PhaseSpace;
use openmech::hamsy::OpenHamiltonianSystem;
use openmech::span::Span;

fn main() -> openmech::Result<()> {
    let pt = PhaseSpace::point("Pt");
    let span = Span::from_projections(pt.clone(), PhaseSpace::euclidean(1), pt)?;
    let osc = OpenHamiltonianSystem::new("osc", span, Expr::parse("p^2/2 + q^2/2")?)?;
    let init: Binding = [("q", 1.0), ("p", 0.0)].into_iter().collect();
    let t_end = 2.0 * std::f64::consts::PI;

    println!("{:>7} {:>8} {:>12} {:>12}", "method", "dt", "final err", "drift");
    for method in [Method::Rk4, Method::Verlet] {
        for dt in [1e-1, 5e-2, 1e-2, 1e-3] {
            let cfg = IntegratorConfig::new(MethodChoice::Force(method), dt, t_end);
            let tr = simulate(&osc, &init, &cfg, &[], &[])?;
            let s = tr.final_state();
            let err = (s[0] - 1.0).hypot(s[1]);
            println!("{:>7} {dt:>8} {err:>12.3e} {:>12.3e}", method.to_string(), energy_drift(&tr, osc.hamiltonian())?);
        }
    }

    let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Verlet), 1e-2, 50.0);
    let fwd = simulate(&osc, &init, &cfg, &[], &[])?;
    let end = fwd.final_state();
    let flipped: Binding = [("q", end[0]), ("p", -end[1])].into_iter().collect();
    let back = simulate(&osc, &flipped, &cfg, &[], &[])?;
    let s = back.final_state();
    println!("verlet forward then back: q={:.3e} off, p={:.3e} off", (s[0] - 1.0).abs(), s[1].abs());

    // independent runs in parallel, results in input order
    let inits: Vec<Binding> = (1..=4).map(|k| [("q", k as f64), ("p", 0.0)].into_iter().collect()).collect();
    for (k, tr) in simulate_batch(&osc, &inits, &IntegratorConfig::new(MethodChoice::Auto, 1e-2, 1.0), &[], &[]).into_iter().enumerate() {
        println!("q0={} -> q(1)={:.6}", k + 1, tr?.final_state()[0]);
    }
    Ok(())
}

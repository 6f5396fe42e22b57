//! Poisson brackets on phase spaces, Hamilton's equations, and Poisson-map
//! checks.
//!
//! ```text
//! cargo run --example poisson
//! ```

use openmech::expr::{Expr, SampleBox};
use openmech::geometry::{
    hamiltonian_vector_field, is_poisson_map, jacobi_residual, poisson_bracket, BivectorConvention, CanonicalPair,
    CoordinateSpace, PhaseSpace, SmoothMap,
};

fn main() -> openmech::Result<()> {
    let r4 = PhaseSpace::euclidean(2);
    let bracket = |f: &str, g: &str| -> openmech::Result<Expr> {
        Ok(poisson_bracket(&Expr::parse(f)?, &Expr::parse(g)?, &r4)?.fold())
    };
    println!("{{q1, p1}}        = {}", bracket("q1", "p1")?);
    println!("{{q1*p2, p1}}     = {}", bracket("q1*p2", "p1")?);
    println!("{{q1^2 p2, q2}}   = {}", bracket("q1^2*p2", "q2")?);

    let bounds = SampleBox::uniform(r4.coords(), -1.0, 1.0);
    let (f, g, h) = (Expr::parse("q1^2*p2")?, Expr::parse("p1*q2 + q1")?, Expr::parse("p1^3 - q2*p2")?);
    println!("Jacobi residual   = {:e}", jacobi_residual(&f, &g, &h, &r4, &bounds, 20, 42)?);

    let h = Expr::parse("p1^2/2 + p2^2/2 + q1^2/2 + q1*q2")?;
    for (x, xdot) in hamiltonian_vector_field(&h, &r4)? {
        println!("d{x}/dt = {}", xdot.fold());
    }

    // forgetting a pair is Poisson; doubling a momentum is not
    let r2 = PhaseSpace::standard("R2", &[("q1", "p1")])?;
    let forget = SmoothMap::projection(&r4, &r2)?;
    println!("forget is Poisson: {}", is_poisson_map(&forget, &r4, &r2, &bounds, 100, 1e-9, 42)?);
    let scale = SmoothMap::new(&r2, &r2, [("q1".to_string(), Expr::var("q1")), ("p1".to_string(), Expr::parse("2*p1")?)])?;
    let b2 = SampleBox::uniform(r2.coords(), -1.0, 1.0);
    println!("scale is Poisson:  {}", is_poisson_map(&scale, &r2, &r2, &b2, 100, 1e-9, 42)?);

    // a pair with form coefficient 2, read under both bivector conventions
    let pair = vec![CanonicalPair::new("q", "p").with_coeff(2.0)];
    for convention in [BivectorConvention::Inverse, BivectorConvention::Literal] {
        let w = PhaseSpace::new("W", pair.clone())?.with_convention(convention);
        let qp = poisson_bracket(&Expr::var("q"), &Expr::var("p"), &w)?.fold();
        println!("{convention:?}: {{q, p}} = {qp}");
    }
    Ok(())
}

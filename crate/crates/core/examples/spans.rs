//! Spans of phase spaces: pullback gluing, tensor products, isomorphism up
//! to relabelling, and leg checks.
//!
//! ```text
//! cargo run --example spans
//! ```

use openmech::expr::Expr;
use openmech::geometry::{CoordinateSpace, PhaseSpace, SmoothMap};
use openmech::span::{
    compose_spans, product_span, pullback, spans_isomorphic, validate_leg, SampleOptions, Span, UnitOrigin,
};

fn main() -> openmech::Result<()> {
    let x = PhaseSpace::standard("X", &[("x", "px")])?;
    let y = PhaseSpace::standard("Y", &[("y", "py")])?;
    let z = PhaseSpace::standard("Z", &[("z", "pz")])?;
    let apex = |name: &str, pairs: &[(&str, &str)]| PhaseSpace::standard(name, pairs);

    // both apexes carry a private pair named (u, pu); the composite qualifies them
    let a = Span::from_projections(x.clone(), apex("A", &[("x", "px"), ("u", "pu"), ("y", "py")])?, y.clone())?;
    let b = Span::from_projections(y.clone(), apex("B", &[("y", "py"), ("u", "pu"), ("z", "pz")])?, z.clone())?;
    let pb = pullback(&a, &b)?;
    println!("A ×_Y B = {}", pb.span.apex());
    for (origin, names) in pb.gluing.origins.iter().zip(&pb.gluing.names) {
        let from = match origin {
            UnitOrigin::Left(i) => format!("left unit {i}"),
            UnitOrigin::Shared { left, right } => format!("shared (left {left}, right {right})"),
            UnitOrigin::Right(i) => format!("right unit {i}"),
        };
        println!("  {names:?} from {from}");
    }

    let ab_c = compose_spans(&pb.span, &Span::from_projections(z.clone(), z.clone(), z.clone())?)?;
    println!("composing with the identity on Z is an isomorphism: {}", spans_isomorphic(&ab_c, &pb.span).is_some());

    let (t, _) = product_span(&a, &b)?;
    println!("A ⊗ B: feet {} and {}, apex dim {}", t.left_foot(), t.right_foot(), t.apex().dim());

    // a leg that squares a coordinate loses rank at the origin
    let line = PhaseSpace::euclidean(1);
    let fold = SmoothMap::new(&line, &line, [("q".to_string(), Expr::parse("q^2")?), ("p".to_string(), Expr::var("p"))])?;
    println!("q -> q^2 as a leg: {}", validate_leg(&fold, &line, &line, &SampleOptions::default())?);
    let shear = SmoothMap::new(&line, &line, [("q".to_string(), Expr::parse("q + p^2")?), ("p".to_string(), Expr::var("p"))])?;
    println!("q -> q + p^2 as a leg: {}", validate_leg(&shear, &line, &line, &SampleOptions::default())?);
    let proj = SmoothMap::projection(a.apex(), &x)?;
    println!("projection A -> X: {}", validate_leg(&proj, a.apex(), &x, &SampleOptions::default())?);
    Ok(())
}

//! Symbolic expressions: parse, differentiate, fold, substitute, and compare
//! by sampling.
//!
//! ```text
//! cargo run --example expressions
//! ```

use std::collections::BTreeMap;

use openmech::expr::{equal_on_samples, Binding, Expr, SampleBox};

fn main() -> openmech::Result<()> {
    let e = Expr::parse("sin(x)*y^2 + sqrt(1 + x^2)/y")?;
    println!("e        = {e}");
    println!("de/dx    = {}", e.diff("x"));
    println!("de/dy    = {}", e.diff("y"));

    let at = Binding::new().with("x", 0.3).with("y", 2.0);
    println!("e(0.3,2) = {}", e.eval(&at)?);

    // x -> 2*t, then fold constants
    let subst: BTreeMap<String, Expr> = [("x".to_string(), Expr::parse("2*t")?)].into();
    println!("e[x:=2t] = {}", e.substitute(&subst));
    println!("fold     = {}", Expr::parse("2*3 + 0*x + 1*y^1")?.fold());

    // two spellings of the same function agree on 100 seeded samples
    let a = Expr::parse("(x + y)^2")?;
    let b = Expr::parse("x^2 + 2*x*y + y^2")?;
    let bounds = SampleBox::uniform(["x", "y"], -1.0, 1.0);
    println!("(x+y)^2 == x^2+2xy+y^2 on samples: {}", equal_on_samples(&a, &b, &bounds, 100, 1e-12, 42)?);
    Ok(())
}

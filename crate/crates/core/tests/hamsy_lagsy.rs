mod common;

use std::collections::BTreeSet;

use common::{decorated, diagonal_space, foot, names, polynomial, projection_span, rng};
use openmech::expr::{Binding, Expr, SampleBox};
use openmech::geometry::{ConfigSpace, CoordinateSpace};
use openmech::hamsy::{self, OpenHamiltonianSystem};
use openmech::lagsy::{self, lagrangian_of, velocity_name, OpenLagrangianSystem};
use openmech::span::Span;
use proptest::prelude::*;
use rand::Rng;

/// Composite name of a coordinate from apex `own`: private names shared
/// with the other apex get qualified by the apex name.
fn composite_name(c: &str, own: &BTreeSet<String>, other: &BTreeSet<String>, apex: &str, feet: &BTreeSet<String>) -> String {
    if !feet.contains(c) && own.contains(c) && other.contains(c) {
        format!("{apex}_{c}")
    } else {
        c.to_string()
    }
}

fn restrict(at: &Binding, coords: &[String], rename: impl Fn(&str) -> String) -> Binding {
    coords.iter().map(|c| (c.clone(), at.get(&rename(c)).unwrap())).collect()
}

fn random_point(r: &mut impl Rng, coords: &[String]) -> Binding {
    coords.iter().map(|c| (c.clone(), r.gen_range(-1.0..1.0))).collect()
}

proptest! {
    #![proptest_config(common::config(100))]

    #[test]
    fn composite_hamiltonian_is_the_pulled_back_sum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y, z) = (foot(0, r.gen_range(0..2)), foot(1, r.gen_range(0..3)), foot(2, r.gen_range(0..2)));
        let (pa, pb) = (r.gen_range(0..3), r.gen_range(0..3));
        let sa = projection_span(&mut r, "A", &x, &y, pa);
        let a = decorated(&mut r, sa);
        let sb = projection_span(&mut r, "B", &y, &z, pb);
        let b = decorated(&mut r, sb);
        let ab = hamsy::compose(&a, &b).unwrap();

        let set = |s: &OpenHamiltonianSystem| s.apex().coords().into_iter().collect::<BTreeSet<_>>();
        let (ca, cb) = (set(&a), set(&b));
        let shared: BTreeSet<String> = y.coords().into_iter().collect();
        prop_assert_eq!(ab.apex().dim(), ca.len() + cb.len() - shared.len());
        for _ in 0..10 {
            let at = random_point(&mut r, &ab.apex().coords());
            let ha = a.hamiltonian().eval(&restrict(&at, &a.apex().coords(), |c| composite_name(c, &ca, &cb, "A", &shared))).unwrap();
            let hb = b.hamiltonian().eval(&restrict(&at, &b.apex().coords(), |c| composite_name(c, &cb, &ca, "B", &shared))).unwrap();
            let h = ab.hamiltonian().eval(&at).unwrap();
            prop_assert!((h - ha - hb).abs() <= 1e-12 * (1.0 + h.abs()));
        }
    }

    #[test]
    fn composite_lagrangian_is_the_pulled_back_sum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let y_coords = names("y", r.gen_range(0..3));
        let mut a_coords = names("a", r.gen_range(0..3));
        let mut b_coords = names("b", r.gen_range(0..3));
        if r.gen_bool(0.5) {
            a_coords.push("w".into());
            b_coords.push("w".into());
        }
        a_coords.extend(y_coords.iter().cloned());
        b_coords.extend(y_coords.iter().cloned());
        let y = ConfigSpace::massless("Y", &y_coords.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
        let pt = ConfigSpace::massless("P", &[]).unwrap();
        let lag = |r: &mut rand_chacha::ChaCha8Rng, name: &str, coords: &[String], left: &ConfigSpace, right: &ConfigSpace| {
            let apex = diagonal_space(r, name, coords);
            let v = if coords.is_empty() { Expr::zero() } else { polynomial(r, coords, 2, 3) };
            OpenLagrangianSystem::new(name, Span::from_projections(left.clone(), apex, right.clone()).unwrap(), v).unwrap()
        };
        let a = lag(&mut r, "A", &a_coords, &pt, &y);
        let b = lag(&mut r, "B", &b_coords, &y, &pt);
        let ab = lagsy::compose(&a, &b).unwrap();

        let (ca, cb): (BTreeSet<String>, BTreeSet<String>) = (a_coords.iter().cloned().collect(), b_coords.iter().cloned().collect());
        let shared: BTreeSet<String> = y_coords.iter().cloned().collect();
        let with_vel = |cs: &[String]| cs.iter().flat_map(|c| [c.clone(), velocity_name(c)]).collect::<Vec<_>>();
        let map = |c: &str, own: &BTreeSet<String>, other: &BTreeSet<String>, apex: &str| match c.strip_suffix("_dot") {
            Some(q) => velocity_name(&composite_name(q, own, other, apex, &shared)),
            None => composite_name(c, own, other, apex, &shared),
        };
        for _ in 0..10 {
            let at = random_point(&mut r, &with_vel(ab.apex().coord_names()));
            let la = lagrangian_of(&a).eval(&restrict(&at, &with_vel(&a_coords), |c| map(c, &ca, &cb, "A"))).unwrap();
            let lb = lagrangian_of(&b).eval(&restrict(&at, &with_vel(&b_coords), |c| map(c, &cb, &ca, "B"))).unwrap();
            let l = lagrangian_of(&ab).eval(&at).unwrap();
            prop_assert!((l - la - lb).abs() <= 1e-12 * (1.0 + l.abs()), "{l} vs {la} + {lb}");
        }
    }
}

#[test]
fn lagrangian_is_kinetic_minus_potential() {
    let apex = ConfigSpace::new(
        "Plane",
        vec!["r".into(), "theta".into()],
        vec![
            vec![Expr::var("m"), Expr::zero()],
            vec![Expr::zero(), Expr::parse("m*r^2").unwrap()],
        ],
    )
    .unwrap()
    .with_params(["m"]);
    let pt = ConfigSpace::massless("Pt", &[]).unwrap().with_params(["m"]);
    let s = OpenLagrangianSystem::new("puck", Span::from_projections(pt.clone(), apex, pt).unwrap(), Expr::parse("m*r").unwrap()).unwrap();
    let l = lagrangian_of(&s);
    let at = Binding::new().with("m", 2.0).with("r", 0.5).with("theta", 1.0).with("r_dot", 0.3).with("theta_dot", -0.7);
    let oracle = 0.5 * 2.0 * 0.3_f64.powi(2) + 0.5 * 2.0 * 0.25 * 0.49 - 2.0 * 0.5;
    assert!((l.eval(&at).unwrap() - oracle).abs() < 1e-14);
}

#[test]
fn identity_lagrangian_is_a_unit() {
    let line = ConfigSpace::diagonal("L", &["r"], vec![Expr::constant(1.0)]).unwrap();
    let pt = ConfigSpace::massless("P", &[]).unwrap();
    let s = OpenLagrangianSystem::new("s", Span::from_projections(pt, line.clone(), line.clone()).unwrap(), Expr::parse("r^2").unwrap()).unwrap();
    let glued = lagsy::compose(&s, &lagsy::identity_system(&line).unwrap()).unwrap();
    let bounds = SampleBox::uniform(["r", "r_dot"], -1.0, 1.0);
    assert!(openmech::expr::equal_on_samples(&lagrangian_of(&glued), &lagrangian_of(&s), &bounds, 20, 1e-14, 1).unwrap());
}

#[test]
fn velocity_name_collision_rejected() {
    let apex = ConfigSpace::massless("A", &["x", "x_dot"]).unwrap();
    let pt = ConfigSpace::massless("P", &[]).unwrap();
    let err = OpenLagrangianSystem::new("s", Span::from_projections(pt.clone(), apex, pt).unwrap(), Expr::zero());
    assert!(matches!(err, Err(openmech::Error::InvalidSpace { .. })));
}

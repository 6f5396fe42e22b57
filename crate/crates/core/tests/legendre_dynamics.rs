mod common;

use common::{diagonal_space, names, polynomial, rng};
use openmech::dynamics::{conserved_residual, energy_drift, simulate, Drive, IntegratorConfig, Method, MethodChoice};
use openmech::expr::{Binding, Expr};
use openmech::geometry::{ConfigSpace, PhaseSpace};
use openmech::hamsy::OpenHamiltonianSystem;
use openmech::lagsy::{lagrangian_of, momentum_name, velocity_name, OpenLagrangianSystem};
use openmech::legendre::{legendre_identity_residual, momenta_at, to_hamiltonian};
use openmech::span::{SampleOptions, Span};
use openmech::Error;
use proptest::prelude::*;
use rand::Rng;

fn closed(space: ConfigSpace, v: Expr) -> OpenLagrangianSystem {
    let pt = ConfigSpace::massless("Pt", &[]).unwrap();
    OpenLagrangianSystem::new("s", Span::from_projections(pt.clone(), space, pt).unwrap(), v).unwrap()
}

fn oscillator() -> OpenHamiltonianSystem {
    let s = PhaseSpace::euclidean(1);
    let pt = PhaseSpace::point("Pt");
    OpenHamiltonianSystem::new("osc", Span::from_projections(pt.clone(), s, pt).unwrap(), Expr::parse("p^2/2 + q^2/2").unwrap()).unwrap()
}

fn init(pairs: &[(&str, f64)]) -> Binding {
    pairs.iter().map(|(n, v)| (*n, *v)).collect()
}

fn final_error(method: Method, dt: f64) -> f64 {
    let tr = simulate(&oscillator(), &init(&[("q", 1.0), ("p", 0.0)]), &IntegratorConfig::new(MethodChoice::Force(method), dt, 1.0), &[], &[]).unwrap();
    let s = tr.final_state();
    ((s[0] - 1f64.cos()).powi(2) + (s[1] + 1f64.sin()).powi(2)).sqrt()
}

proptest! {
    #![proptest_config(common::config(50))]

    #[test]
    fn legendre_identity_on_diagonal_systems(seed in any::<u64>()) {
        let mut r = rng(seed);
        let coords = names("x", r.gen_range(1..4));
        let s = closed(diagonal_space(&mut r, "D", &coords), polynomial(&mut r, &coords, 3, 3));
        let res = to_hamiltonian(&s, &SampleOptions::default()).unwrap();
        let residual = legendre_identity_residual(&s, &res, &SampleOptions::default()).unwrap();
        prop_assert!(residual <= 1e-9, "residual {residual}");
    }

    #[test]
    fn hamilton_velocity_inverts_momentum_map(seed in any::<u64>()) {
        // ∂H/∂p at p = M q̇ returns q̇, and -∂H/∂q there equals ∂L/∂q
        let mut r = rng(seed);
        let coords = names("x", r.gen_range(1..4));
        let s = closed(diagonal_space(&mut r, "D", &coords), polynomial(&mut r, &coords, 3, 3));
        let res = to_hamiltonian(&s, &SampleOptions::default()).unwrap();
        let mut at = Binding::new();
        for c in &coords {
            at.set(c.clone(), r.gen_range(-1.0..1.0));
            at.set(velocity_name(c), r.gen_range(-1.0..1.0));
        }
        for (p, v) in momenta_at(&res, &at).unwrap() {
            at.set(p, v);
        }
        let h = res.ham.hamiltonian();
        let l = lagrangian_of(&s);
        for c in &coords {
            let qdot = h.diff(&momentum_name(c)).eval(&at).unwrap();
            prop_assert!((qdot - at.get(&velocity_name(c)).unwrap()).abs() < 1e-10);
            let force = -h.diff(c).eval(&at).unwrap();
            let dl = l.diff(c).eval(&at).unwrap();
            prop_assert!((force - dl).abs() < 1e-10 * (1.0 + dl.abs()), "{force} vs {dl}");
        }
    }
}

#[test]
fn coupled_metric_inverse() {
    let metric = vec![
        vec![Expr::constant(2.0), Expr::var("x")],
        vec![Expr::var("x"), Expr::constant(3.0)],
    ];
    let s = closed(ConfigSpace::new("C", vec!["x".into(), "y".into()], metric).unwrap(), Expr::zero());
    let res = to_hamiltonian(&s, &SampleOptions::default()).unwrap();
    let (x, px, py) = (0.4, 0.7, -1.1);
    let at = Binding::new().with("x", x).with("y", 0.0).with("p_x", px).with("p_y", py);
    let det = 6.0 - x * x;
    let oracle = 0.5 * (3.0 * px * px - 2.0 * x * px * py + 2.0 * py * py) / det;
    assert!((res.ham.hamiltonian().eval(&at).unwrap() - oracle).abs() < 1e-14);
}

#[test]
fn indefinite_metric_rejected() {
    let s = closed(ConfigSpace::diagonal("N", &["x"], vec![Expr::constant(-1.0)]).unwrap(), Expr::zero());
    assert!(matches!(to_hamiltonian(&s, &SampleOptions::default()), Err(Error::SingularMetric(_))));
}

#[test]
fn massless_coordinates_drop_out() {
    let s = closed(ConfigSpace::diagonal("D", &["x", "z"], vec![Expr::constant(2.0), Expr::zero()]).unwrap(), Expr::parse("z*x").unwrap());
    let res = to_hamiltonian(&s, &SampleOptions::default()).unwrap();
    assert!(!res.ham.hamiltonian().mentions("p_z"));
}

#[test]
fn rk4_is_fourth_order() {
    let ratio = final_error(Method::Rk4, 0.02) / final_error(Method::Rk4, 0.01);
    assert!((ratio.log2() - 4.0).abs() < 0.3, "observed order {}", ratio.log2());
}

#[test]
fn verlet_is_second_order() {
    let ratio = final_error(Method::Verlet, 0.02) / final_error(Method::Verlet, 0.01);
    assert!((ratio.log2() - 2.0).abs() < 0.2, "observed order {}", ratio.log2());
}

#[test]
fn verlet_reverses() {
    let sys = oscillator();
    let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Verlet), 0.01, 5.0);
    let tr = simulate(&sys, &init(&[("q", 0.3), ("p", 0.8)]), &cfg, &[], &[]).unwrap();
    let end = tr.final_state();
    let back = simulate(&sys, &init(&[("q", end[0]), ("p", -end[1])]), &cfg, &[], &[]).unwrap();
    let s = back.final_state();
    assert!((s[0] - 0.3).abs() < 1e-9 && (s[1] + 0.8).abs() < 1e-9, "{s:?}");
}

#[test]
fn pendulum_energy_is_bounded_under_verlet() {
    let s = PhaseSpace::euclidean(1);
    let pt = PhaseSpace::point("Pt");
    let h = Expr::parse("p^2/2 - cos(q)").unwrap();
    let sys = OpenHamiltonianSystem::new("pend", Span::from_projections(pt.clone(), s, pt).unwrap(), h.clone()).unwrap();
    let tr = simulate(&sys, &init(&[("q", 1.0), ("p", 0.0)]), &IntegratorConfig::new(MethodChoice::Auto, 1e-3, 50.0), &[], &[]).unwrap();
    assert_eq!(tr.method, Method::Verlet);
    assert!(energy_drift(&tr, &h).unwrap() < 1e-6);
}

#[test]
fn drive_clamps_coordinate() {
    let sys = oscillator();
    let drives = [Drive { coord: "q".into(), value: Expr::parse("sin(t)").unwrap() }];
    let tr = simulate(&sys, &Binding::new(), &IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 0.01, 1.0), &drives, &[]).unwrap();
    for k in 0..tr.len() {
        assert!((tr.value(k, "q").unwrap() - tr.times[k].sin()).abs() < 1e-12);
    }
}

#[test]
fn sqrt_outside_domain_reports_time() {
    let s = PhaseSpace::euclidean(1);
    let pt = PhaseSpace::point("Pt");
    let h = Expr::parse("p^2/2 + sqrt(q)").unwrap();
    let sys = OpenHamiltonianSystem::new("bad", Span::from_projections(pt.clone(), s, pt).unwrap(), h).unwrap();
    let res = simulate(&sys, &init(&[("q", 0.01), ("p", -1.0)]), &IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 0.01, 1.0), &[], &[]);
    assert!(matches!(res, Err(Error::DomainAt { .. })), "{res:?}");
}

#[test]
fn angular_momentum_of_central_force() {
    let s = PhaseSpace::euclidean(2);
    let pt = PhaseSpace::point("Pt");
    let h = Expr::parse("(p1^2 + p2^2)/2 - 1/sqrt(q1^2 + q2^2)").unwrap();
    let sys = OpenHamiltonianSystem::new("kepler", Span::from_projections(pt.clone(), s, pt).unwrap(), h).unwrap();
    let l = Expr::parse("q1*p2 - q2*p1").unwrap();
    let tr = simulate(&sys, &init(&[("q1", 1.0), ("q2", 0.0), ("p1", 0.0), ("p2", 1.1)]), &IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 1e-3, 10.0), &[], &[]).unwrap();
    assert!(conserved_residual(&tr, &l).unwrap() < 1e-9);
}

#[test]
fn rk4_energy_drift_on_oscillator() {
    let sys = oscillator();
    let tr = simulate(&sys, &init(&[("q", 1.0), ("p", 0.0)]), &IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 1e-3, 10.0), &[], &[]).unwrap();
    assert!(energy_drift(&tr, sys.hamiltonian()).unwrap() < 1e-8);
}

#[test]
fn conserved_residual_shrinks_at_method_order() {
    // rotation generator q1 p2 - q2 p1 commutes with an isotropic anharmonic H
    let s = PhaseSpace::euclidean(2);
    let pt = PhaseSpace::point("Pt");
    let h = Expr::parse("(p1^2 + p2^2)/2 + (q1^2 + q2^2)^2/4").unwrap();
    let sys = OpenHamiltonianSystem::new("iso", Span::from_projections(pt.clone(), s, pt).unwrap(), h).unwrap();
    let l = Expr::parse("q1*p2 - q2*p1").unwrap();
    let x0 = init(&[("q1", 1.0), ("q2", 0.2), ("p1", 0.1), ("p2", 0.9)]);
    for (method, order) in [(Method::Rk4, 4.0), (Method::Verlet, 2.0)] {
        let run = |dt: f64| {
            let tr = simulate(&sys, &x0, &IntegratorConfig::new(MethodChoice::Force(method), dt, 2.0), &[], &[]).unwrap();
            conserved_residual(&tr, &l).unwrap()
        };
        let observed = (run(0.04) / run(0.02)).log2();
        assert!(observed >= order - 0.5 || run(0.02) < 1e-13, "{method}: observed order {observed}");
    }
}

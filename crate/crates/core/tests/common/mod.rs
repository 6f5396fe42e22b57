//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use openmech::expr::{Expr, SampleBox};
use openmech::geometry::{CanonicalPair, ConfigSpace, CoordinateSpace, PhaseSpace};
use openmech::hamsy::OpenHamiltonianSystem;
use openmech::span::Span;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".osys"))
        .collect();
    names.sort();
    names
}

/// Random polynomial of total degree at most `degree` with coefficients in
/// `[-1, 1]`.
pub fn polynomial(r: &mut impl Rng, vars: &[String], degree: u32, terms: usize) -> Expr {
    let mut out = Vec::new();
    for _ in 0..terms {
        let d = r.gen_range(0..=degree);
        let mut factors = vec![Expr::constant(r.gen_range(-1.0..1.0))];
        for _ in 0..d {
            factors.push(Expr::var(vars.choose(r).unwrap().clone()));
        }
        out.push(Expr::product(factors));
    }
    Expr::sum(out)
}

/// Random smooth expression, finite and differentiable everywhere: square
/// roots and denominators are kept away from zero.
pub fn smooth_expr(r: &mut impl Rng, vars: &[String], depth: u32) -> Expr {
    if depth == 0 || r.gen_bool(0.2) {
        return if r.gen_bool(0.7) {
            Expr::var(vars.choose(r).unwrap().clone())
        } else {
            Expr::constant((r.gen_range(-3.0..3.0_f64) * 4.0).round() / 4.0)
        };
    }
    let sub = |r: &mut ChaCha8Rng| smooth_expr(r, vars, depth - 1);
    let mut local = ChaCha8Rng::seed_from_u64(r.gen());
    match r.gen_range(0..9) {
        0 => sub(&mut local) + sub(&mut local),
        1 => sub(&mut local) - sub(&mut local),
        2 => sub(&mut local) * sub(&mut local),
        3 => sub(&mut local) / (Expr::constant(1.5) + sub(&mut local).pow(2)),
        4 => sub(&mut local).pow(r.gen_range(2..4)),
        5 => sub(&mut local).sin(),
        6 => sub(&mut local).cos(),
        7 => (Expr::one() + sub(&mut local).pow(2)).sqrt(),
        _ => -sub(&mut local),
    }
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn unit_box(vars: &[String]) -> SampleBox {
    SampleBox::uniform(vars.iter().cloned(), -1.0, 1.0)
}

/// Foot `X{i}` with `k` standard pairs `x{i}_{j}, y{i}_{j}`.
pub fn foot(i: usize, k: usize) -> PhaseSpace {
    let pairs = (0..k)
        .map(|j| CanonicalPair::new(format!("x{i}_{j}"), format!("y{i}_{j}")))
        .collect();
    PhaseSpace::new(format!("X{i}"), pairs).unwrap()
}

/// Projection span `left ← S → right` whose apex holds both feet's pairs
/// (disjoint images) plus `private` extra pairs, in shuffled order. Private
/// pair names collide across spans with probability ½.
pub fn projection_span(
    r: &mut impl Rng,
    apex_name: &str,
    left: &PhaseSpace,
    right: &PhaseSpace,
    private: usize,
) -> Span<PhaseSpace> {
    let mut pairs: Vec<CanonicalPair> = left.pairs().iter().chain(right.pairs()).cloned().collect();
    for j in 0..private {
        let (q, p) = if r.gen_bool(0.5) {
            (format!("u{j}"), format!("v{j}"))
        } else {
            (format!("{apex_name}u{j}"), format!("{apex_name}v{j}"))
        };
        pairs.push(CanonicalPair::new(q, p));
    }
    pairs.shuffle(r);
    let apex = PhaseSpace::new(apex_name, pairs).unwrap();
    Span::from_projections(left.clone(), apex, right.clone()).unwrap()
}

pub fn decorated(r: &mut impl Rng, span: Span<PhaseSpace>) -> OpenHamiltonianSystem {
    let coords: Vec<String> = span.apex().pairs().iter().flat_map(|p| [p.q.clone(), p.p.clone()]).collect();
    let h = if coords.is_empty() {
        Expr::constant(r.gen_range(-1.0..1.0))
    } else {
        polynomial(r, &coords, 3, 4)
    };
    let name = span.apex().name().to_string();
    OpenHamiltonianSystem::new(name, span, h).unwrap()
}

/// Random composable triple `X0 ← S1 → X1 ← S2 → X2 ← S3 → X3`.
pub fn composable_triple(r: &mut impl Rng) -> [OpenHamiltonianSystem; 3] {
    let feet: Vec<PhaseSpace> = (0..4).map(|i| foot(i, r.gen_range(0..=2))).collect();
    let sys = |i: usize, r: &mut ChaCha8Rng| {
        let private = r.gen_range(0..=2);
        let span = projection_span(r, &format!("S{}", i + 1), &feet[i], &feet[i + 1], private);
        decorated(r, span)
    };
    let mut local = ChaCha8Rng::seed_from_u64(r.gen());
    [sys(0, &mut local), sys(1, &mut local), sys(2, &mut local)]
}

/// Random diagonal-metric configuration space with positive masses.
pub fn diagonal_space(r: &mut impl Rng, name: &str, coords: &[String]) -> ConfigSpace {
    let masses = coords
        .iter()
        .map(|c| {
            if r.gen_bool(0.5) {
                Expr::constant(r.gen_range(0.5..2.0))
            } else {
                Expr::constant(r.gen_range(0.5..1.5)) + Expr::var(c.clone()).pow(2)
            }
        })
        .collect();
    let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
    ConfigSpace::diagonal(name, &refs, masses).unwrap()
}

pub fn load_model(name: &str) -> openmech::dsl::model::Model {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    let file = openmech::dsl::parse(&text).unwrap();
    openmech::dsl::model::Model::build(&file, &Default::default()).unwrap()
}

/// Runs the CLI in-process and returns `(exit code, stdout, stderr)`.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("open-mech").chain(args.iter().copied());
    let code = openmech::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}

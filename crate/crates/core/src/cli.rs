//! The `open-mech` command-line driver.
//!
//! Reports are line-oriented `key: value` text on stdout; errors go to
//! stderr. Exit codes: 0 success, 1 a check failed, 2 usage or parse error,
//! 3 runtime (domain) error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dsl::model::{with_coordinate_defaults, Model, ModelError, ModelOptions, Origin, Space, System};
use crate::dsl::{parse, parse_expression};
use crate::dynamics::{conserved_residual, energy_drift, simulate, IntegratorConfig, Method, MethodChoice};
use crate::error::Error;
use crate::expr::sample::within;
use crate::expr::{Expr, SampleBox};
use crate::geometry::{jacobi_residual, poisson_bracket, BivectorConvention, ConfigSpace, CoordinateSpace, PhaseSpace};
use crate::hamsy::OpenHamiltonianSystem;
use crate::lagsy::{lagrangian_of, OpenLagrangianSystem};
use crate::legendre::functor_discrepancy;
use crate::span::{validate_leg, SampleOptions, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "open-mech", version, about = "Compose, transform and simulate open mechanical systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalFlags,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalFlags {
    /// Seed for all sampled checks.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Relative tolerance for sampled checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Sample points per check.
    #[arg(long, global = true, default_value_t = 100)]
    pub samples: usize,
    /// Bivector on glued pairs: `inverse` (b = 1/c) or `paper`, alias `literal` (b = c).
    #[arg(long, global = true, default_value = "inverse")]
    pub shared_pair_bivector: BivectorConvention,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate legs and bracket axioms of declared maps and systems.
    Check { file: PathBuf },
    /// Describe every composite and tensor product.
    Compose { file: PathBuf },
    /// Describe every Legendre transform.
    Legendre { file: PathBuf },
    /// Run every simulate block, writing one CSV per system.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        method: Option<Method>,
        /// Directory for `<system>.csv`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print the Poisson bracket `{f, g}`.
    Bracket {
        /// A space declared in `--file`, or `R2`, `R4`, ... (`q, p` or `q1, p1, ...`).
        #[arg(long)]
        space: String,
        #[arg(long)]
        file: Option<PathBuf>,
        f: String,
        g: String,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_)
        | Error::DomainAt { .. }
        | Error::UnboundVariable(_)
        | Error::SingularMetric(_)
        | Error::NonSeparable => EXIT_RUNTIME,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure {
            code: exit_code(&e.error),
            message: e.to_string(),
        }
    }
}

/// Ordered `key: value` lines.
#[derive(Debug, Default)]
pub struct Report {
    text: String,
    failed: bool,
}

impl Report {
    pub fn line(&mut self, key: impl AsRef<str>, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{}: {value}", key.as_ref());
    }

    pub fn verdict(&mut self, key: impl AsRef<str>, v: &Verdict) {
        self.failed |= v.is_failed();
        self.line(key, v);
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn failed(&self) -> bool {
        self.failed
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let _ = out.write_all(report.text().as_bytes());
            if report.failed() {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path, flags: &GlobalFlags) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("{}: {e}", path.display()),
    })?;
    let with_path = |f: Failure| Failure {
        code: f.code,
        message: format!("{}: {}", path.display(), f.message),
    };
    let file = parse(&text).map_err(|e| with_path(e.into()))?;
    let options = ModelOptions {
        convention: flags.shared_pair_bivector,
        sampling: SampleOptions {
            bounds: SampleBox::new(),
            samples: flags.samples,
            tol: flags.tol,
            seed: flags.seed,
        },
    };
    Model::build(&file, &options).map_err(|e| with_path(e.into()))
}

fn execute(cli: &Cli) -> Result<Report, Failure> {
    let flags = &cli.global;
    if flags.samples == 0 {
        return Err(Error::Config("--samples must be at least 1".into()).into());
    }
    match &cli.command {
        Command::Check { file } => check(&load(file, flags)?),
        Command::Compose { file } => compose(&load(file, flags)?),
        Command::Legendre { file } => legendre(&load(file, flags)?),
        Command::Simulate {
            file,
            dt,
            t_end,
            method,
            out_dir,
        } => run_simulations(&load(file, flags)?, *dt, *t_end, *method, out_dir),
        Command::Bracket { space, file, f, g } => {
            let model = file.as_ref().map(|p| load(p, flags)).transpose()?;
            bracket(model.as_ref(), space, f, g, flags.shared_pair_bivector)
        }
    }
}

/// The built-in `R2n` spaces, or a phase space from the model.
fn lookup_space(model: Option<&Model>, name: &str, convention: BivectorConvention) -> Result<PhaseSpace, Failure> {
    if let Some(s) = model.and_then(|m| m.phase_space(name)) {
        return Ok(s.clone());
    }
    let dim = name.strip_prefix('R').and_then(|d| d.parse::<usize>().ok());
    match dim {
        Some(d) if d > 0 && d % 2 == 0 => Ok(PhaseSpace::euclidean(d / 2).with_convention(convention)),
        _ => Err(Error::Config(format!("unknown phase space `{name}`")).into()),
    }
}

fn bracket(model: Option<&Model>, space: &str, f: &str, g: &str, convention: BivectorConvention) -> Result<Report, Failure> {
    let space = lookup_space(model, space, convention)?;
    let f = parse_expression(f)?;
    let g = parse_expression(g)?;
    let b = poisson_bracket(&f, &g, &space)?;
    let mut r = Report::default();
    let _ = writeln!(r.text, "{b}");
    Ok(r)
}

fn sample_axiom(
    pairs: &[(String, Expr, Expr)],
    bounds: &SampleBox,
    opts: &SampleOptions,
) -> Result<Verdict, Error> {
    for point in bounds.points(opts.samples, opts.seed)? {
        for (what, a, b) in pairs {
            let x = a.eval(&point)?;
            let y = b.eval(&point)?;
            if !within(x, y, opts.tol) {
                return Ok(Verdict::Failed(format!("{what}: {x} vs {y}")));
            }
        }
    }
    Ok(Verdict::Evidence(opts.samples))
}

fn bracket_axioms(sys: &OpenHamiltonianSystem, opts: &SampleOptions, r: &mut Report) -> Result<(), Error> {
    let space = sys.apex();
    let h = sys.hamiltonian();
    let coords = space.coords();
    let bounds = with_coordinate_defaults(&opts.bounds, &coords);
    let pb = |a: &Expr, b: &Expr| poisson_bracket(a, b, space);
    let mut anti = Vec::new();
    let mut leibniz = Vec::new();
    for (i, x) in coords.iter().enumerate() {
        let xv = Expr::var(x.clone());
        anti.push((format!("{{H, {x}}}"), pb(h, &xv)?, -pb(&xv, h)?));
        if let Some(y) = coords.get(i + 1) {
            let yv = Expr::var(y.clone());
            let lhs = pb(h, &(xv.clone() * yv.clone()))?;
            let rhs = pb(h, &xv)? * yv.clone() + xv.clone() * pb(h, &yv)?;
            leibniz.push((format!("{{H, {x}*{y}}}"), lhs, rhs));
        }
    }
    let name = sys.name();
    r.verdict(format!("system {name}.antisymmetry"), &sample_axiom(&anti, &bounds, opts)?);
    let mut worst = 0.0_f64;
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            let x = Expr::var(coords[i].clone());
            let y = Expr::var(coords[j].clone());
            worst = worst.max(jacobi_residual(h, &x, &y, space, &bounds, opts.samples, opts.seed)?);
        }
    }
    let jacobi = if worst <= opts.tol {
        Verdict::Evidence(opts.samples)
    } else {
        Verdict::Failed(format!("cyclic sum {worst:e}"))
    };
    r.verdict(format!("system {name}.jacobi"), &jacobi);
    r.verdict(format!("system {name}.leibniz"), &sample_axiom(&leibniz, &bounds, opts)?);
    Ok(())
}

fn check(model: &Model) -> Result<Report, Failure> {
    let opts = model.sampling();
    let mut r = Report::default();
    for (name, entry) in &model.maps {
        let v = match (&model.spaces[&entry.source], &model.spaces[&entry.target]) {
            (Space::Phase(a), Space::Phase(b)) => validate_leg(&entry.map, a, b, &opts)?,
            (Space::Config(a), Space::Config(b)) => validate_leg(&entry.map, a, b, &opts)?,
            _ => unreachable!("map kinds are checked when the model is built"),
        };
        r.verdict(format!("leg {name}"), &v);
    }
    for entry in &model.systems {
        if !matches!(entry.origin, Origin::Declared { .. }) {
            continue;
        }
        let name = &entry.name;
        match &entry.system {
            System::Ham(h) => {
                let (l, rt) = h.validate(&opts)?;
                r.verdict(format!("system {name}.left_leg"), &l);
                r.verdict(format!("system {name}.right_leg"), &rt);
                bracket_axioms(h, &opts, &mut r)?;
            }
            System::Lag(l) => {
                let (lv, rv) = l.validate(&opts)?;
                r.verdict(format!("system {name}.left_leg"), &lv);
                r.verdict(format!("system {name}.right_leg"), &rv);
                let metric = match l.metric_defect(&opts)? {
                    None => Verdict::Evidence(opts.samples),
                    Some(p) => Verdict::Failed(format!(
                        "not positive-definite at {}",
                        describe_point(&p, l.apex().coord_names())
                    )),
                };
                r.verdict(format!("system {name}.metric"), &metric);
            }
        }
    }
    r.line("status", if r.failed() { "failed" } else { "ok" });
    Ok(r)
}

fn describe_point(p: &crate::expr::Binding, coords: &[String]) -> String {
    coords
        .iter()
        .filter_map(|c| p.get(c).map(|v| format!("{c}={v}")))
        .collect::<Vec<_>>()
        .join(", ")
}

fn describe_pairs(space: &PhaseSpace) -> String {
    space
        .pairs()
        .iter()
        .map(|p| format!("({}, {}) c={}", p.q, p.p, p.coeff))
        .collect::<Vec<_>>()
        .join(", ")
}

fn describe_ham(r: &mut Report, name: &str, h: &OpenHamiltonianSystem) {
    let span = h.span();
    r.line(format!("{name}.feet"), format!("{} {}", span.left_foot().name(), span.right_foot().name()));
    r.line(format!("{name}.apex_dim"), h.apex().dim());
    r.line(format!("{name}.pairs"), describe_pairs(h.apex()));
    r.line(format!("{name}.H"), h.hamiltonian());
}

fn describe_metric(space: &ConfigSpace) -> String {
    let rows: Vec<String> = space
        .metric()
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn describe_lag(r: &mut Report, name: &str, l: &OpenLagrangianSystem) {
    let span = l.span();
    r.line(format!("{name}.feet"), format!("{} {}", span.left_foot().name(), span.right_foot().name()));
    r.line(format!("{name}.apex_dim"), l.apex().dim());
    r.line(format!("{name}.coords"), l.apex().coord_names().join(", "));
    r.line(format!("{name}.metric"), describe_metric(l.apex()));
    r.line(format!("{name}.V"), l.potential());
    r.line(format!("{name}.L"), lagrangian_of(l));
}

fn compose(model: &Model) -> Result<Report, Failure> {
    let mut r = Report::default();
    let mut count = 0;
    for entry in &model.systems {
        if !matches!(entry.origin, Origin::Compose { .. } | Origin::Tensor { .. }) {
            continue;
        }
        count += 1;
        match &entry.system {
            System::Ham(h) => describe_ham(&mut r, &entry.name, h),
            System::Lag(l) => describe_lag(&mut r, &entry.name, l),
        }
    }
    r.line("composites", count);
    Ok(r)
}

fn legendre(model: &Model) -> Result<Report, Failure> {
    let opts = model.sampling();
    let mut r = Report::default();
    let mut count = 0;
    for entry in &model.systems {
        let Origin::Legendre { source } = &entry.origin else {
            continue;
        };
        let (System::Ham(h), Some(result)) = (&entry.system, &entry.legendre) else {
            continue;
        };
        count += 1;
        let name = &entry.name;
        describe_ham(&mut r, name, h);
        let momenta: Vec<String> = result.momentum_map.iter().map(|(p, e)| format!("{p} = {e}")).collect();
        r.line(format!("{name}.momenta"), momenta.join(", "));
        let parts = model.system(source).and_then(|s| match &s.origin {
            Origin::Compose { left, right } => Some((left, right)),
            _ => None,
        });
        if let Some((left, right)) = parts {
            let (Some(System::Lag(a)), Some(System::Lag(b))) = (
                model.system(left).map(|s| &s.system),
                model.system(right).map(|s| &s.system),
            ) else {
                continue;
            };
            let d = functor_discrepancy(a, b, &opts)?;
            r.line(format!("{name}.functor_discrepancy"), format!("{d:e}"));
        }
    }
    r.line("transforms", count);
    Ok(r)
}

fn run_simulations(
    model: &Model,
    dt: Option<f64>,
    t_end: Option<f64>,
    method: Option<Method>,
    out_dir: &Path,
) -> Result<Report, Failure> {
    let mut r = Report::default();
    for sim in &model.simulations {
        let Some(System::Ham(sys)) = model.system(&sim.system).map(|s| &s.system) else {
            continue;
        };
        let dt = dt.or(sim.dt).ok_or_else(|| Error::Config(format!("no dt for `{}`", sim.system)))?;
        let t_end = t_end
            .or(sim.t_end)
            .ok_or_else(|| Error::Config(format!("no t_end for `{}`", sim.system)))?;
        let method = method.or(sim.method).unwrap_or(Method::Rk4);
        let cfg = IntegratorConfig::new(MethodChoice::Force(method), dt, t_end).with_params(model.param_binding());
        let (steps, h) = cfg.steps()?;
        let tr = simulate(sys, &sim.init, &cfg, &sim.drives, &sim.monitors)?;
        let path = out_dir.join(format!("{}.csv", sim.system));
        std::fs::write(&path, tr.to_csv()).map_err(|e| Failure {
            code: EXIT_RUNTIME,
            message: format!("{}: {e}", path.display()),
        })?;
        r.line("simulate", &sim.system);
        r.line("method", tr.method);
        r.line("steps", steps);
        r.line("dt", format!("{h:e}"));
        r.line("csv", path.display());
        r.line("energy", format!("drift {:e}", energy_drift(&tr, sys.hamiltonian())?));
        for (name, f) in &sim.monitors {
            r.line(format!("conserved {name}"), format!("residual {:e}", conserved_residual(&tr, f)?));
        }
    }
    Ok(r)
}

//! Fixed-step integration of Hamilton's equations.
//!
//! Two methods are available: classical RK4 and Störmer–Verlet
//! (kick-drift-kick), which needs a structurally separable Hamiltonian.
//! Boundary coordinates can be driven by functions of `t`; a driven `q` is
//! overwritten each step and its conjugate momentum is held fixed.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Binding, CompiledExpr, Expr};
use crate::geometry::{hamiltonian_vector_field, CoordinateSpace, PhaseSpace};
use crate::hamsy::OpenHamiltonianSystem;

/// Name of the time variable in drive expressions.
pub const TIME: &str = "t";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Verlet,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::Verlet => "verlet",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "verlet" => Ok(Method::Verlet),
            other => Err(Error::Config(format!("unknown method `{other}` (expected rk4 or verlet)"))),
        }
    }
}

/// Requested method; `Auto` picks Verlet when the Hamiltonian is separable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MethodChoice {
    #[default]
    Auto,
    Force(Method),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: MethodChoice,
    pub dt: f64,
    pub t_end: f64,
    pub params: Binding,
}

impl IntegratorConfig {
    pub fn new(method: MethodChoice, dt: f64, t_end: f64) -> Self {
        IntegratorConfig {
            method,
            dt,
            t_end,
            params: Binding::new(),
        }
    }

    pub fn with_params(mut self, params: Binding) -> Self {
        self.params = params;
        self
    }

    /// Step count and effective step: `t_end` is hit exactly.
    pub fn steps(&self) -> Result<(usize, f64)> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) || self.dt > self.t_end {
            return Err(Error::Config(format!(
                "t_end must be positive and at least dt, got {}",
                self.t_end
            )));
        }
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        Ok((n, self.t_end / n as f64))
    }
}

/// A coordinate clamped to `value(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub coord: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub coords: Vec<String>,
    pub monitor_names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitors: Vec<Vec<f64>>,
    pub params: Binding,
    pub method: Method,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Coordinates, parameters and `t` at row `k`.
    pub fn binding_at(&self, k: usize) -> Binding {
        let mut b = self.params.clone();
        for (c, v) in self.coords.iter().zip(&self.states[k]) {
            b.set(c.clone(), *v);
        }
        b.set(TIME, self.times[k]);
        b
    }

    pub fn value(&self, k: usize, coord: &str) -> Option<f64> {
        self.coords.iter().position(|c| c == coord).map(|i| self.states[k][i])
    }

    pub fn monitor(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.monitor_names.iter().position(|m| m == name)?;
        Some(self.monitors.iter().map(|row| row[i]).collect())
    }

    /// CSV with header `t,<coords>,<monitors>`, 17 significant digits.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        let header: Vec<&str> = std::iter::once(TIME)
            .chain(self.coords.iter().map(String::as_str))
            .chain(self.monitor_names.iter().map(String::as_str))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.len() {
            let row: Vec<String> = std::iter::once(self.times[k])
                .chain(self.states[k].iter().copied())
                .chain(self.monitors[k].iter().copied())
                .map(|x| format!("{x:.16e}"))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Each addend of `h` mentions only positions or only momenta.
pub fn is_separable(h: &Expr, space: &PhaseSpace) -> bool {
    let qs: BTreeSet<&str> = space.qs().collect();
    let ps: BTreeSet<&str> = space.ps().collect();
    h.addends().iter().all(|a| {
        let vars = a.free_vars();
        let has_q = vars.iter().any(|v| qs.contains(v.as_str()));
        let has_p = vars.iter().any(|v| ps.contains(v.as_str()));
        !(has_q && has_p)
    })
}

/// Compiled equations of motion on the full apex state vector.
#[derive(Debug, Clone)]
pub struct Flow {
    method: Method,
    coords: Vec<String>,
    slots: Vec<String>,
    params: Vec<f64>,
    field: Vec<CompiledExpr>,
    evolved: Vec<usize>,
    q_idx: Vec<usize>,
    p_idx: Vec<usize>,
    drives: Vec<(usize, CompiledExpr)>,
}

impl Flow {
    pub fn new(sys: &OpenHamiltonianSystem, params: &Binding, drives: &[Drive], choice: MethodChoice) -> Result<Self> {
        let space = sys.apex();
        let coords = space.coords();
        let separable = is_separable(sys.hamiltonian(), space);
        let method = match choice {
            MethodChoice::Force(Method::Verlet) if !separable => return Err(Error::NonSeparable),
            MethodChoice::Force(m) => m,
            MethodChoice::Auto if separable => Method::Verlet,
            MethodChoice::Auto => Method::Rk4,
        };
        let param_names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
        let mut slots = coords.clone();
        slots.push(TIME.to_string());
        slots.extend(param_names.iter().cloned());
        let param_values = params.iter().map(|(_, v)| v).collect();

        let field = hamiltonian_vector_field(sys.hamiltonian(), space)?
            .iter()
            .map(|(_, e)| CompiledExpr::new(e, &slots))
            .collect::<Result<Vec<_>>>()?;

        let mut frozen = BTreeSet::new();
        let mut compiled_drives = Vec::new();
        for d in drives {
            let pair = space.pairs().iter().position(|p| p.q == d.coord).ok_or_else(|| {
                Error::UnknownCoordinate {
                    name: d.coord.clone(),
                    space: space.name().to_string(),
                }
            })?;
            frozen.insert(2 * pair);
            frozen.insert(2 * pair + 1);
            compiled_drives.push((2 * pair, CompiledExpr::new(&d.value, &slots)?));
        }
        let evolved: Vec<usize> = (0..coords.len()).filter(|i| !frozen.contains(i)).collect();
        let q_idx = evolved.iter().copied().filter(|i| i % 2 == 0).collect();
        let p_idx = evolved.iter().copied().filter(|i| i % 2 == 1).collect();
        Ok(Flow {
            method,
            coords,
            slots,
            params: param_values,
            field,
            evolved,
            q_idx,
            p_idx,
            drives: compiled_drives,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// Slot layout used by compiled expressions: coordinates, `t`, params.
    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    fn values(&self, state: &[f64], t: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.slots.len());
        v.extend_from_slice(state);
        v.push(t);
        v.extend_from_slice(&self.params);
        v
    }

    fn at(err: Error, t: f64) -> Error {
        match err {
            Error::Domain(detail) => Error::DomainAt { time: t, detail },
            other => other,
        }
    }

    /// Evaluates an expression compiled against [`Flow::slots`].
    pub fn eval(&self, e: &CompiledExpr, state: &[f64], t: f64) -> Result<f64> {
        e.eval(&self.values(state, t)).map_err(|err| Self::at(err, t))
    }

    /// Overwrites driven coordinates with their values at `t`.
    pub fn apply_drives(&self, state: &mut [f64], t: f64) -> Result<()> {
        for (i, f) in &self.drives {
            state[*i] = self.eval(f, state, t)?;
        }
        Ok(())
    }

    fn derivative(&self, state: &[f64], t: f64, which: &[usize], out: &mut [f64]) -> Result<()> {
        let vals = self.values(state, t);
        for (o, &i) in out.iter_mut().zip(which) {
            *o = self.field[i].eval(&vals).map_err(|e| Self::at(e, t))?;
        }
        Ok(())
    }

    /// One step of size `h` (negative `h` runs backwards).
    pub fn step(&self, state: &mut [f64], t: f64, h: f64) -> Result<()> {
        match self.method {
            Method::Rk4 => self.rk4(state, t, h)?,
            Method::Verlet => self.verlet(state, t, h)?,
        }
        if let Some(bad) = state.iter().position(|x| !x.is_finite()) {
            return Err(Error::DomainAt {
                time: t + h,
                detail: format!("`{}` is no longer finite", self.coords[bad]),
            });
        }
        Ok(())
    }

    fn rk4(&self, state: &mut [f64], t: f64, h: f64) -> Result<()> {
        let idx = &self.evolved;
        let n = idx.len();
        let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut tmp = state.to_vec();
        self.derivative(state, t, idx, &mut k[0])?;
        for (stage, (c, dt)) in [(0.5, 0.5), (0.5, 0.5), (1.0, 1.0)].iter().enumerate() {
            tmp.copy_from_slice(state);
            for (a, &i) in idx.iter().enumerate() {
                tmp[i] = state[i] + c * h * k[stage][a];
            }
            self.apply_drives(&mut tmp, t + dt * h)?;
            let (done, rest) = k.split_at_mut(stage + 1);
            let _ = done;
            self.derivative(&tmp, t + dt * h, idx, &mut rest[0])?;
        }
        for (a, &i) in idx.iter().enumerate() {
            state[i] += h / 6.0 * (k[0][a] + 2.0 * k[1][a] + 2.0 * k[2][a] + k[3][a]);
        }
        self.apply_drives(state, t + h)
    }

    fn verlet(&self, state: &mut [f64], t: f64, h: f64) -> Result<()> {
        let mut kick = vec![0.0; self.p_idx.len()];
        let mut drift = vec![0.0; self.q_idx.len()];
        self.derivative(state, t, &self.p_idx, &mut kick)?;
        for (a, &i) in self.p_idx.iter().enumerate() {
            state[i] += 0.5 * h * kick[a];
        }
        self.derivative(state, t, &self.q_idx, &mut drift)?;
        for (a, &i) in self.q_idx.iter().enumerate() {
            state[i] += h * drift[a];
        }
        self.apply_drives(state, t + h)?;
        self.derivative(state, t + h, &self.p_idx, &mut kick)?;
        for (a, &i) in self.p_idx.iter().enumerate() {
            state[i] += 0.5 * h * kick[a];
        }
        Ok(())
    }
}

/// Initial state vector in apex order. Conjugates of driven coordinates
/// default to 0; driven coordinates take their value at `t = 0`.
fn initial_state(flow: &Flow, init: &Binding, drives: &[Drive]) -> Result<Vec<f64>> {
    let driven: BTreeSet<&str> = drives.iter().map(|d| d.coord.as_str()).collect();
    let mut state = Vec::with_capacity(flow.coords.len());
    for (i, c) in flow.coords.iter().enumerate() {
        let optional = i % 2 == 1 && driven.contains(flow.coords[i - 1].as_str()) || driven.contains(c.as_str());
        match init.get(c) {
            Some(v) => state.push(v),
            None if optional => state.push(0.0),
            None => return Err(Error::Config(format!("no initial value for `{c}`"))),
        }
    }
    flow.apply_drives(&mut state, 0.0)?;
    Ok(state)
}

/// Integrates `sys` from `init` and records `monitors` at every step.
pub fn simulate(
    sys: &OpenHamiltonianSystem,
    init: &Binding,
    cfg: &IntegratorConfig,
    drives: &[Drive],
    monitors: &[(String, Expr)],
) -> Result<Trajectory> {
    let (n, h) = cfg.steps()?;
    for v in sys.hamiltonian().free_vars() {
        if !sys.apex().has_coord(&v) && cfg.params.get(&v).is_none() {
            return Err(Error::UnboundVariable(v));
        }
    }
    let flow = Flow::new(sys, &cfg.params, drives, cfg.method)?;
    let compiled_monitors = monitors
        .iter()
        .map(|(_, e)| CompiledExpr::new(e, flow.slots()))
        .collect::<Result<Vec<_>>>()?;
    let mut state = initial_state(&flow, init, drives)?;
    let record = |state: &[f64], t: f64| -> Result<Vec<f64>> {
        compiled_monitors.iter().map(|m| flow.eval(m, state, t)).collect()
    };
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut rows = Vec::with_capacity(n + 1);
    times.push(0.0);
    rows.push(record(&state, 0.0)?);
    states.push(state.clone());
    for k in 0..n {
        let t = k as f64 * h;
        flow.step(&mut state, t, h)?;
        let t1 = (k + 1) as f64 * h;
        times.push(t1);
        rows.push(record(&state, t1)?);
        states.push(state.clone());
    }
    Ok(Trajectory {
        coords: flow.coords.clone(),
        monitor_names: monitors.iter().map(|(n, _)| n.clone()).collect(),
        times,
        states,
        monitors: rows,
        params: cfg.params.clone(),
        method: flow.method,
    })
}

/// Runs independent initial conditions in parallel; results are in input
/// order and do not depend on scheduling.
pub fn simulate_batch(
    sys: &OpenHamiltonianSystem,
    inits: &[Binding],
    cfg: &IntegratorConfig,
    drives: &[Drive],
    monitors: &[(String, Expr)],
) -> Vec<Result<Trajectory>> {
    inits
        .par_iter()
        .map(|init| simulate(sys, init, cfg, drives, monitors))
        .collect()
}

fn values_along(tr: &Trajectory, f: &Expr) -> Result<Vec<f64>> {
    let mut slots = tr.coords.clone();
    slots.push(TIME.to_string());
    let names: Vec<String> = tr.params.iter().map(|(n, _)| n.to_string()).collect();
    slots.extend(names);
    let c = CompiledExpr::new(f, &slots)?;
    let params: Vec<f64> = tr.params.iter().map(|(_, v)| v).collect();
    let mut vals = Vec::with_capacity(slots.len());
    (0..tr.len())
        .map(|k| {
            vals.clear();
            vals.extend_from_slice(&tr.states[k]);
            vals.push(tr.times[k]);
            vals.extend_from_slice(&params);
            c.eval(&vals)
        })
        .collect()
}

/// `max_t |H(x_t) − H(x_0)| / (1 + |H(x_0)|)`.
pub fn energy_drift(tr: &Trajectory, h: &Expr) -> Result<f64> {
    let vals = values_along(tr, h)?;
    let Some(&h0) = vals.first() else {
        return Ok(0.0);
    };
    Ok(vals.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max) / (1.0 + h0.abs()))
}

/// `max_t |F(x_t) − F(x_0)|`.
pub fn conserved_residual(tr: &Trajectory, f: &Expr) -> Result<f64> {
    let vals = values_along(tr, f)?;
    let Some(&f0) = vals.first() else {
        return Ok(0.0);
    };
    Ok(vals.iter().map(|v| (v - f0).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::identity_span;
    use std::f64::consts::PI;

    fn v(n: &str) -> Expr {
        Expr::var(n)
    }

    fn oscillator(coeff: f64) -> OpenHamiltonianSystem {
        let x = PhaseSpace::new("X", vec![crate::geometry::CanonicalPair::new("q", "p").with_coeff(coeff)]).unwrap();
        OpenHamiltonianSystem::new("osc", identity_span(&x), 0.5 * v("p").pow(2) + 0.5 * v("q").pow(2)).unwrap()
    }

    fn start() -> Binding {
        Binding::new().with("q", 1.0).with("p", 0.0)
    }

    #[test]
    fn rk4_closes_the_orbit() {
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 1e-3, 2.0 * PI);
        let tr = simulate(&oscillator(1.0), &start(), &cfg, &[], &[]).unwrap();
        let end = tr.final_state();
        assert!((end[0] - 1.0).abs() < 1e-6 && end[1].abs() < 1e-6, "{end:?}");
        assert!((tr.times.last().unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!(energy_drift(&tr, oscillator(1.0).hamiltonian()).unwrap() < 1e-8);
    }

    #[test]
    fn verlet_is_auto_selected_and_reversible() {
        let sys = oscillator(1.0);
        let cfg = IntegratorConfig::new(MethodChoice::Auto, 1e-3, 10.0);
        let tr = simulate(&sys, &start(), &cfg, &[], &[]).unwrap();
        assert_eq!(tr.method, Method::Verlet);
        assert_eq!(tr.len(), 10_001);
        assert!(energy_drift(&tr, sys.hamiltonian()).unwrap() < 1e-6);

        let flow = Flow::new(&sys, &Binding::new(), &[], MethodChoice::Auto).unwrap();
        let mut s = vec![1.0, 0.0];
        for k in 0..10_000 {
            flow.step(&mut s, k as f64 * 1e-3, 1e-3).unwrap();
        }
        for k in (0..10_000).rev() {
            flow.step(&mut s, (k + 1) as f64 * 1e-3, -1e-3).unwrap();
        }
        assert!((s[0] - 1.0).abs() < 1e-9 && s[1].abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn verlet_refused_for_mixed_hamiltonian() {
        let x = PhaseSpace::standard("X", &[("q", "p")]).unwrap();
        let sys = OpenHamiltonianSystem::new("s", identity_span(&x), v("q") * v("p")).unwrap();
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Verlet), 1e-2, 1.0);
        assert_eq!(simulate(&sys, &start(), &cfg, &[], &[]), Err(Error::NonSeparable));
        let cfg = IntegratorConfig::new(MethodChoice::Auto, 1e-2, 1.0);
        assert_eq!(simulate(&sys, &start(), &cfg, &[], &[]).unwrap().method, Method::Rk4);
    }

    #[test]
    fn zero_hamiltonian_stands_still() {
        let x = PhaseSpace::standard("X", &[("q", "p")]).unwrap();
        let sys = OpenHamiltonianSystem::new("s", identity_span(&x), Expr::zero()).unwrap();
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 0.1, 1.0);
        let tr = simulate(&sys, &start(), &cfg, &[], &[("q".into(), v("q"))]).unwrap();
        assert!(tr.states.iter().all(|s| s == &vec![1.0, 0.0]));
        assert_eq!(energy_drift(&tr, &Expr::zero()).unwrap(), 0.0);
        assert_eq!(conserved_residual(&tr, &v("q")).unwrap(), 0.0);
    }

    #[test]
    fn shared_pair_halves_frequency() {
        let crossings = |tr: &Trajectory| {
            tr.states.windows(2).filter(|w| w[0][0] > 0.0 && w[1][0] <= 0.0).count()
        };
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 1e-3, 40.0 * PI);
        let one = simulate(&oscillator(1.0), &start(), &cfg, &[], &[]).unwrap();
        let two = simulate(&oscillator(2.0), &start(), &cfg, &[], &[]).unwrap();
        assert_eq!(crossings(&one), 20);
        assert_eq!(crossings(&two), 10);
    }

    #[test]
    fn driven_coordinate_follows_its_function() {
        let x = PhaseSpace::standard("X", &[("q", "p"), ("u", "w")]).unwrap();
        let h = 0.5 * v("p").pow(2) + 0.5 * (v("q") - v("u")).pow(2);
        let sys = OpenHamiltonianSystem::new("s", identity_span(&x), h).unwrap();
        let drive = Drive {
            coord: "u".into(),
            value: v("t").sin(),
        };
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 1e-2, 1.0);
        let tr = simulate(&sys, &start(), &cfg, &[drive], &[]).unwrap();
        for k in 0..tr.len() {
            assert!((tr.value(k, "u").unwrap() - tr.times[k].sin()).abs() < 1e-12);
            assert_eq!(tr.value(k, "w").unwrap(), 0.0);
        }
    }

    #[test]
    fn domain_errors_carry_the_time() {
        let x = PhaseSpace::standard("X", &[("q", "p")]).unwrap();
        let sys = OpenHamiltonianSystem::new("s", identity_span(&x), v("p").pow(2) / 2.0 + v("q").sqrt()).unwrap();
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 0.1, 10.0);
        let init = Binding::new().with("q", 0.5).with("p", -1.0);
        assert!(matches!(simulate(&sys, &init, &cfg, &[], &[]), Err(Error::DomainAt { .. })));
    }

    #[test]
    fn csv_layout() {
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 0.5, 1.0);
        let tr = simulate(&oscillator(1.0), &start(), &cfg, &[], &[("E".into(), v("q"))]).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,q,p,E");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').next().unwrap(), "0.0000000000000000e0");
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn batch_matches_serial() {
        let sys = oscillator(1.0);
        let cfg = IntegratorConfig::new(MethodChoice::Force(Method::Rk4), 1e-2, 1.0);
        let inits: Vec<Binding> = (0..8).map(|i| Binding::new().with("q", i as f64).with("p", 0.5)).collect();
        let batch = simulate_batch(&sys, &inits, &cfg, &[], &[]);
        for (init, got) in inits.iter().zip(batch) {
            assert_eq!(got.unwrap(), simulate(&sys, init, &cfg, &[], &[]).unwrap());
        }
    }
}

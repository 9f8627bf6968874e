use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{
    diagnostic_tolerance, GeoRule, OutputKind, ProblemSpec, RunConfig, StepSpec, StepperKind,
};
use crate::apps::{kepler_propagate, wave_propagate};
use crate::error::{OscError, Result};
use crate::exact1d::{
    energy_invariants, exact_step, exact_step_damped, exact_velocity, recurrence_step,
    trapezoid_form_step, Osc1DSpec, Phase1D,
};
use crate::exactnd::{
    apply_exact, central_velocity_with, forced_recurrence_with, nd_energy, nd_forced_step_with,
    nd_trapezoid_step, recurrence_with, OscNDSpec, ParticularSolution, PhaseND,
};
use crate::geofamily::{family_step, FamilyRule};
use crate::locexact::{discrete_gradient_step, Potential};
use crate::phasefun::{phase_functions, PhaseFunctionSet, SquareMatrix};
use crate::refschemes::{
    exponential_euler_with, gautschi_step, lawson_explicit_with, lawson_implicit_with,
    symmetric_euler_step, LinearPart, NonlinearForce,
};

/// One node of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Time-stamped states with optional energy diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub energy_labels: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `max_n |E_n − E_0|` for every energy column.
    pub fn energy_drift(&self) -> Vec<f64> {
        let Some(first) = self.rows.first() else {
            return Vec::new();
        };
        (0..self.energy_labels.len())
            .map(|k| {
                self.rows
                    .iter()
                    .map(|r| (r.energies[k] - first.energies[k]).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDrift {
    pub label: String,
    pub max_drift: f64,
}

/// Per-run summary record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub stepper: String,
    pub steps: usize,
    pub final_state: TrajectoryRow,
    pub energy_drift: Vec<EnergyDrift>,
    pub max_energy_drift: Option<f64>,
    pub tolerance: f64,
    /// Whether every energy column stayed within `tolerance`.
    pub energy_conserved: Option<bool>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

/// Raw states `(t, x, v)` for nodes `0..=steps + 1`; the extra node feeds
/// two-point diagnostics on the last row.
struct States {
    t: Vec<f64>,
    x: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl States {
    fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, x: Vec<f64>, v: Vec<f64>) {
        self.t.push(t);
        self.x.push(x);
        self.v.push(v);
    }

    fn push_scalar(&mut self, s: Phase1D) {
        self.push(s.t, vec![s.x], vec![s.v]);
    }
}

/// Executes a configuration.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let tolerance = diagnostic_tolerance()?;
    let started = Instant::now();
    let want_energy = config.wants(OutputKind::Energies) || config.wants(OutputKind::Summary);
    let states = integrate(config, config.steps + 1)?;
    let dim = config.problem.state_dim();
    let (labels, energies) = if want_energy {
        energies(config, &states)?
    } else {
        (Vec::new(), vec![Vec::new(); config.steps + 1])
    };
    let rows: Vec<TrajectoryRow> = (0..=config.steps)
        .zip(energies)
        .map(|(n, e)| TrajectoryRow {
            n,
            t: states.t[n],
            x: states.x[n].clone(),
            v: states.v[n].clone(),
            energies: e,
        })
        .collect();
    let trajectory = Trajectory {
        dim,
        energy_labels: labels,
        rows,
    };
    let drift = trajectory.energy_drift();
    let max_drift = drift.iter().copied().reduce(f64::max);
    let summary = RunSummary {
        problem: config.problem.kind().name().into(),
        stepper: config.stepper.label(),
        steps: config.steps,
        final_state: trajectory.rows.last().cloned().expect("at least one row"),
        energy_drift: trajectory
            .energy_labels
            .iter()
            .zip(&drift)
            .map(|(l, d)| EnergyDrift {
                label: l.clone(),
                max_drift: *d,
            })
            .collect(),
        max_energy_drift: max_drift,
        tolerance,
        energy_conserved: max_drift.map(|d| d <= tolerance),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        trajectory,
        summary,
    })
}

/// States at nodes `0..=total` (one more than the configured steps when
/// called from [`run`]).
fn integrate(config: &RunConfig, total: usize) -> Result<States> {
    match &config.problem {
        ProblemSpec::Osc1d(spec) => integrate_osc1d(config, spec, total),
        ProblemSpec::Damped1d(spec) => integrate_damped(config, spec, total),
        ProblemSpec::OscNd(spec) => integrate_nd(config, spec, total),
        ProblemSpec::Kepler(spec) => {
            let mut s = *spec;
            s.dphi = config.eps.at(0);
            s.steps = total;
            let orbit = kepler_propagate(&s)?;
            let mut out = States::with_capacity(total + 1);
            for o in orbit {
                out.push(o.t, vec![o.u], vec![o.du]);
            }
            Ok(out)
        }
        ProblemSpec::Wave(spec) => {
            let mut s = spec.clone();
            s.dt = config.eps.at(0);
            // one more sample so velocities exist on every reported node
            s.steps = total + 1;
            s.grid = None;
            let res = wave_propagate(&s)?;
            let mut out = States::with_capacity(total + 1);
            for n in 0..=total {
                let mut x = Vec::with_capacity(2 * s.modes.len());
                let mut v = Vec::with_capacity(2 * s.modes.len());
                for (h, &w) in res.history.iter().zip(&res.omegas) {
                    x.push(h[n].re);
                    x.push(h[n].im);
                    let d = if n == 0 {
                        s.modes[v.len() / 2].udot0
                    } else {
                        (h[n + 1] - h[n - 1]) * (w / (2.0 * (w * s.dt).sin()))
                    };
                    v.push(d.re);
                    v.push(d.im);
                }
                out.push(n as f64 * s.dt, x, v);
            }
            Ok(out)
        }
        ProblemSpec::Nonlinear1d(spec) => {
            let pot = spec.potential.build();
            integrate_nonlinear(config, &spec.potential, &pot, total)
        }
    }
}

fn scalar_initial(config: &RunConfig) -> Phase1D {
    let (t, x, v) = config.initial_state();
    Phase1D::new(x[0], v[0], t)
}

fn one_step_1d(
    config: &RunConfig,
    total: usize,
    mut step: impl FnMut(Phase1D, f64) -> Result<Phase1D>,
) -> Result<States> {
    let mut s = scalar_initial(config);
    let mut out = States::with_capacity(total + 1);
    out.push_scalar(s);
    for n in 0..total {
        s = step(s, config.eps.at(n)).map_err(|e| e.at_step(n + 1))?;
        out.push_scalar(s);
    }
    Ok(out)
}

/// Runs a two-step position scheme and recovers velocities from
/// neighbouring positions.
fn two_step_1d(
    config: &RunConfig,
    total: usize,
    seed: impl FnOnce(Phase1D, f64) -> Result<f64>,
    mut step: impl FnMut(f64, f64, f64) -> Result<f64>,
    velocity: impl Fn(f64, f64, f64, f64) -> Result<f64>,
) -> Result<States> {
    let s0 = scalar_initial(config);
    let eps = config.eps.at(0);
    let mut xs = Vec::with_capacity(total + 2);
    xs.push(s0.x);
    xs.push(seed(s0, eps).map_err(|e| e.at_step(1))?);
    for n in 1..=total {
        let next = step(xs[n], xs[n - 1], eps).map_err(|e| e.at_step(n + 1))?;
        xs.push(next);
    }
    let mut out = States::with_capacity(total + 1);
    for n in 0..=total {
        let v = if n == 0 {
            s0.v
        } else {
            velocity(xs[n + 1], xs[n], xs[n - 1], eps).map_err(|e| e.at_step(n))?
        };
        out.push(s0.t + n as f64 * eps, vec![xs[n]], vec![v]);
    }
    Ok(out)
}

/// Caches propagators per distinct step size.
struct ExpCache {
    l: LinearPart,
    cache: HashMap<u64, (SquareMatrix, SquareMatrix)>,
}

impl ExpCache {
    fn new(l: LinearPart) -> Self {
        Self {
            l,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, eps: f64) -> Result<&(SquareMatrix, SquareMatrix)> {
        let key = eps.to_bits();
        if !self.cache.contains_key(&key) {
            let p = self.l.propagators(eps)?;
            self.cache.insert(key, p);
        }
        Ok(&self.cache[&key])
    }
}

/// Exponential integrators on the first-order system `y = (x, v)`.
fn exponential_scheme(
    config: &RunConfig,
    total: usize,
    l: LinearPart,
    g: &NonlinearForce,
) -> Result<States> {
    let (t0, x0, v0) = config.initial_state();
    let n = x0.len();
    let mut y: Vec<f64> = x0.iter().chain(&v0).copied().collect();
    let mut cache = ExpCache::new(l);
    let mut out = States::with_capacity(total + 1);
    let mut t = t0;
    out.push(t, x0, v0);
    for k in 0..total {
        let eps = config.eps.at(k);
        let (e, p) = cache.get(eps)?;
        y = match config.stepper {
            StepperKind::LawsonExplicit => lawson_explicit_with(e, &y, eps, g),
            StepperKind::LawsonImplicit => lawson_implicit_with(e, &y, eps, g),
            StepperKind::ExponentialEuler => exponential_euler_with(e, p, &y, eps, g),
            other => Err(OscError::Internal(format!(
                "{} is not exponential",
                other.label()
            ))),
        }
        .map_err(|e| e.at_step(k + 1))?;
        t += eps;
        out.push(t, y[..n].to_vec(), y[n..].to_vec());
    }
    Ok(out)
}

fn integrate_osc1d(config: &RunConfig, spec: &Osc1DSpec, total: usize) -> Result<States> {
    let w = spec.omega;
    match config.stepper {
        StepperKind::ExactFree | StepperKind::ExactDriven => {
            one_step_1d(config, total, |s, e| exact_step(s, spec, e))
        }
        StepperKind::TrapezoidForm => {
            one_step_1d(config, total, |s, e| trapezoid_form_step(s, spec, e))
        }
        StepperKind::GeoFamily { rule } => {
            let family = match rule {
                GeoRule::Exact => FamilyRule::exact(spec.m, w),
                GeoRule::SymmetricEuler => FamilyRule::symmetric_euler(spec.m, w),
            };
            let m = spec.m;
            one_step_1d(config, total, |s, e| {
                let (x, p) = family_step(&family.params(e), s.x, m * s.v)?;
                Ok(Phase1D::new(x, p / m, s.t + e))
            })
        }
        StepperKind::Recurrence => two_step_1d(
            config,
            total,
            |s, e| Ok(exact_step(s, spec, e)?.x),
            |x, xp, e| recurrence_step(x, xp, spec, e),
            |xn, x, _, e| exact_velocity(xn, x, spec, e),
        ),
        StepperKind::Gautschi => {
            let g = NonlinearForce::constant(vec![spec.g]);
            two_step_1d(
                config,
                total,
                |s, e| Ok(exact_step(s, spec, e)?.x),
                |x, xp, e| Ok(gautschi_step(&[x], &[xp], w, e, &g)?[0]),
                |xn, _, xp, e| central_velocity(xn, xp, w, e),
            )
        }
        StepperKind::SymmetricEuler => two_step_1d(
            config,
            total,
            |s, e| Ok(s.x + e * s.v + 0.5 * e * e * (spec.g - w * w * s.x)),
            |x, xp, e| Ok(symmetric_euler_step(x, xp, w, e, spec.g)),
            |xn, _, xp, e| Ok((xn - xp) / (2.0 * e)),
        ),
        StepperKind::DiscreteGradient { policy } => {
            let pot = Potential::quadratic(w * w, -spec.g);
            one_step_1d(config, total, |s, e| {
                discrete_gradient_step(s, &pot, e, policy)
            })
        }
        StepperKind::LawsonExplicit
        | StepperKind::LawsonImplicit
        | StepperKind::ExponentialEuler => {
            let g = NonlinearForce::constant(vec![0.0, spec.g]);
            exponential_scheme(config, total, LinearPart::oscillator(w), &g)
        }
        other => Err(unsupported(other, config)),
    }
}

/// `v_n = ω(x_{n+1} − x_{n−1})/(2 sin ωε)`.
fn central_velocity(x_next: f64, x_prev: f64, w: f64, eps: f64) -> Result<f64> {
    let s = (w * eps).sin();
    if s.abs() < crate::exact1d::RESONANCE_TOL {
        return Err(OscError::VelocityNotRecoverable { sin: s });
    }
    Ok(w * (x_next - x_prev) / (2.0 * s))
}

fn unsupported(st: StepperKind, config: &RunConfig) -> OscError {
    OscError::Config(format!(
        "stepper {} is not applicable to problem {}",
        st.label(),
        config.problem.kind().name()
    ))
}

fn integrate_damped(config: &RunConfig, spec: &Osc1DSpec, total: usize) -> Result<States> {
    match config.stepper {
        StepperKind::ExactDamped => {
            one_step_1d(config, total, |s, e| exact_step_damped(s, spec, e))
        }
        StepperKind::LawsonExplicit
        | StepperKind::LawsonImplicit
        | StepperKind::ExponentialEuler => {
            let w0 = spec.omega;
            let l = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![-w0 * w0, -2.0 * spec.gamma]])?;
            let g = NonlinearForce::constant(vec![0.0, -spec.g]);
            exponential_scheme(config, total, LinearPart::new(l)?, &g)
        }
        other => Err(unsupported(other, config)),
    }
}

/// `[[0, I], [−Ω², 0]]`
fn nd_generator(a: &SquareMatrix) -> SquareMatrix {
    let n = a.dim();
    SquareMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, false) if j - n == i => 1.0,
        (false, true) => -a.get(i - n, j),
        _ => 0.0,
    })
}

fn integrate_nd(config: &RunConfig, spec: &OscNDSpec, total: usize) -> Result<States> {
    let (t0, x0, v0) = config.initial_state();
    let n = spec.dim();
    let mut out = States::with_capacity(total + 1);
    let mut pf_cache: HashMap<u64, PhaseFunctionSet> = HashMap::new();
    let mut phase = |eps: f64| -> Result<PhaseFunctionSet> {
        let key = eps.to_bits();
        if let Some(pf) = pf_cache.get(&key) {
            return Ok(pf.clone());
        }
        let pf = phase_functions(&spec.a, eps)?;
        pf_cache.insert(key, pf.clone());
        Ok(pf)
    };
    match config.stepper {
        StepperKind::ExactND | StepperKind::TrapezoidForm => {
            let constant = spec.forcing.constant_vector(n);
            let ps = match constant {
                Some(_) => None,
                None => Some(ParticularSolution::new(&spec.forcing, &spec.a)?),
            };
            let mut s = PhaseND::new(x0, v0, t0)?;
            out.push(s.t, s.x.clone(), s.v.clone());
            for k in 0..total {
                let eps = config.eps.at(k);
                s = match (config.stepper, &constant, &ps) {
                    (StepperKind::TrapezoidForm, _, _) => nd_trapezoid_step(&s, spec, eps),
                    (_, Some(force), _) => {
                        phase(eps).map(|pf| apply_exact(&s, &spec.a, &pf, force))
                    }
                    (_, None, Some(ps)) => nd_forced_step_with(&s, spec, ps, eps),
                    _ => unreachable!("forcing is either constant or has a particular solution"),
                }
                .map_err(|e| e.at_step(k + 1))?;
                out.push(s.t, s.x.clone(), s.v.clone());
            }
            Ok(out)
        }
        StepperKind::Recurrence => {
            let eps = config.eps.at(0);
            let pf = phase(eps)?;
            let force = spec.forcing.constant_vector(n);
            let ps = match force {
                Some(_) => None,
                None => Some(ParticularSolution::new(&spec.forcing, &spec.a)?),
            };
            let s0 = PhaseND::new(x0, v0, t0)?;
            let s1 = match (&force, &ps) {
                (Some(f), _) => Ok(apply_exact(&s0, &spec.a, &pf, f)),
                (None, Some(ps)) => nd_forced_step_with(&s0, spec, ps, eps),
                _ => unreachable!("forcing is either constant or has a particular solution"),
            }
            .map_err(|e| e.at_step(1))?;
            let mut xs = vec![s0.x.clone(), s1.x];
            let mut vs = vec![s0.v.clone()];
            for k in 1..=total {
                let t_k = t0 + k as f64 * eps;
                let (next, v) = match (&force, &ps) {
                    (Some(f), _) => {
                        let next = recurrence_with(&pf, &xs[k], &xs[k - 1], f);
                        central_velocity_with(&pf, &next, &xs[k - 1]).map(|v| (next, v))
                    }
                    (None, Some(ps)) => forced_recurrence_with(&pf, ps, &xs[k], &xs[k - 1], t_k),
                    _ => unreachable!("forcing is either constant or has a particular solution"),
                }
                .map_err(|e| e.at_step(k + 1))?;
                xs.push(next);
                vs.push(v);
            }
            for k in 0..=total {
                out.push(t0 + k as f64 * eps, xs[k].clone(), vs[k].clone());
            }
            Ok(out)
        }
        StepperKind::LawsonExplicit
        | StepperKind::LawsonImplicit
        | StepperKind::ExponentialEuler => {
            let force = spec.constant_force()?;
            let g: Vec<f64> = vec![0.0; n].into_iter().chain(force).collect();
            exponential_scheme(
                config,
                total,
                LinearPart::new(nd_generator(&spec.a))?,
                &NonlinearForce::constant(g),
            )
        }
        other => Err(unsupported(other, config)),
    }
}

fn integrate_nonlinear(
    config: &RunConfig,
    pspec: &crate::locexact::PotentialSpec,
    pot: &Potential,
    total: usize,
) -> Result<States> {
    match config.stepper {
        StepperKind::DiscreteGradient { policy } => one_step_1d(config, total, |s, e| {
            discrete_gradient_step(s, pot, e, policy)
        }),
        StepperKind::Gautschi => {
            let (w, g) = pspec.linear_split()?;
            let pot = pot.clone();
            two_step_1d(
                config,
                total,
                // second-order Taylor seed from the full force
                |s, e| Ok(s.x + e * s.v - 0.5 * e * e * pot.d1(s.x)),
                |x, xp, e| Ok(gautschi_step(&[x], &[xp], w, e, &g)?[0]),
                |xn, _, xp, e| central_velocity(xn, xp, w, e),
            )
        }
        StepperKind::LawsonExplicit
        | StepperKind::LawsonImplicit
        | StepperKind::ExponentialEuler => {
            let (w, g) = pspec.linear_split()?;
            let lifted = NonlinearForce::new(move |y| {
                let gx = g.eval(&y[..1]).map(|v| v[0]).unwrap_or(f64::NAN);
                vec![0.0, gx]
            });
            exponential_scheme(config, total, LinearPart::oscillator(w), &lifted)
        }
        other => Err(unsupported(other, config)),
    }
}

/// Energy columns defined for the problem and stepper.
fn energies(config: &RunConfig, st: &States) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let rows = config.steps + 1;
    let labels = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match &config.problem {
        ProblemSpec::Osc1d(spec) => {
            pair_invariants(config, spec, st).map(|e| (labels(&["E0", "E1", "E2", "E3"]), e))
        }
        ProblemSpec::Kepler(k) => {
            let spec = Osc1DSpec::driven(1.0, k.binet_force());
            pair_invariants(config, &spec, st).map(|e| (labels(&["E0", "E1", "E2", "E3"]), e))
        }
        ProblemSpec::OscNd(spec) if spec.symmetric() && spec.forcing.is_constant() => {
            let mut out = Vec::with_capacity(rows);
            for n in 0..rows {
                let s = PhaseND {
                    x: st.x[n].clone(),
                    v: st.v[n].clone(),
                    t: st.t[n],
                };
                out.push(vec![nd_energy(&s, spec)?]);
            }
            Ok((labels(&["I"]), out))
        }
        ProblemSpec::Wave(spec) => {
            let w = spec.frequencies();
            let m = spec.modes.len();
            let names = (0..m).map(|k| format!("W{k}")).collect();
            let out = (0..rows)
                .map(|n| {
                    (0..m)
                        .map(|k| {
                            let (x, v) = (&st.x[n], &st.v[n]);
                            let u2 = x[2 * k] * x[2 * k] + x[2 * k + 1] * x[2 * k + 1];
                            let v2 = v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1];
                            0.5 * v2 + 0.5 * w[k] * w[k] * u2
                        })
                        .collect()
                })
                .collect();
            Ok((names, out))
        }
        ProblemSpec::Nonlinear1d(spec) => {
            let pot = spec.potential.build();
            let out = (0..rows)
                .map(|n| vec![0.5 * st.v[n][0] * st.v[n][0] + pot.value(st.x[n][0])])
                .collect();
            Ok((labels(&["H"]), out))
        }
        _ => Ok((Vec::new(), vec![Vec::new(); rows])),
    }
}

/// `E⁽⁰⁾ … E⁽³⁾` from consecutive positions with the step that joins them.
fn pair_invariants(config: &RunConfig, spec: &Osc1DSpec, st: &States) -> Result<Vec<Vec<f64>>> {
    (0..=config.steps)
        .map(|n| {
            let eps = match &config.eps {
                StepSpec::Constant(e) => *e,
                seq => seq.at(n),
            };
            energy_invariants(st.x[n][0], st.x[n + 1][0], spec, eps)
                .map(|q| q.as_array().to_vec())
                .map_err(|e| e.at_step(n))
        })
        .collect()
}

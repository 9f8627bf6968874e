use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{OutputKind, ProblemSpec, RunConfig, StepSpec, StepperKind};
use super::run::{run, Trajectory};
use crate::error::{OscError, Result};
use crate::exact1d::{exact_step, exact_step_damped, Phase1D};
use crate::exactnd::{nd_forced_step, PhaseND};
use crate::reference::reference_samples;

/// Per-step rounding allowance: sweep points with error at or below
/// `ORDER_FIT_FLOOR * steps` are treated as exact and excluded from the
/// order fit.
pub const ORDER_FIT_FLOOR: f64 = 1e-13;

/// Minimum number of step sizes in a convergence sweep.
pub const MIN_SWEEP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Closed-form solution evaluated at each node.
    Analytic,
    /// The exact stepper of the same problem on the same step sequence.
    Exact,
}

impl FromStr for Reference {
    type Err = OscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Reference::Analytic),
            "exact" | "exact-stepper" | "exact_stepper" => Ok(Reference::Exact),
            other => Err(OscError::Config(format!(
                "unknown reference {other:?}; expected analytic or exact"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub steps: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub stepper: String,
    pub steps: usize,
    /// Max-norm deviation from the reference over all nodes.
    pub error: f64,
    pub energy_drift: Option<f64>,
    /// Fitted log-log slope of error against step size.
    pub order: Option<f64>,
    pub sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub problem: String,
    pub reference: Reference,
    pub horizon: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let mut out = String::from("stepper,steps,error,energy_drift,order\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{},{}",
                r.stepper,
                r.steps,
                r.error,
                opt(r.energy_drift),
                opt(r.order)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes infallibly")
    }
}

/// Runs every configuration against a common reference.
///
/// With a sweep, each configuration is rerun at every listed constant step
/// over the same horizon and the observed order is fitted.
pub fn compare(
    configs: &[RunConfig],
    reference: Reference,
    sweep: Option<&[f64]>,
) -> Result<ComparisonTable> {
    let first = configs
        .first()
        .ok_or_else(|| OscError::Config("compare needs at least one config".into()))?;
    let horizon = first.eps.horizon(first.steps);
    let start = first.initial_state();
    for (i, c) in configs.iter().enumerate() {
        c.validate()?;
        if c.problem != first.problem {
            return Err(OscError::Config(format!(
                "config {i} has a different problem or spec than config 0"
            )));
        }
        let h = c.eps.horizon(c.steps);
        if !same_horizon(h, horizon) {
            return Err(OscError::Config(format!(
                "config {i} has horizon {h}, config 0 has {horizon}"
            )));
        }
        if c.initial_state() != start {
            return Err(OscError::Config(format!(
                "config {i} starts from a different initial state"
            )));
        }
    }
    if let Some(s) = sweep {
        if s.len() < MIN_SWEEP {
            return Err(OscError::Config(format!(
                "a sweep needs at least {MIN_SWEEP} step sizes, got {}",
                s.len()
            )));
        }
        for &e in s {
            sweep_steps(e, horizon)?;
        }
    }

    let rows = configs
        .par_iter()
        .map(|c| compare_one(c, reference, sweep, horizon))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonTable {
        problem: first.problem.kind().name().into(),
        reference,
        horizon,
        rows,
    })
}

fn same_horizon(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn sweep_steps(eps: f64, horizon: f64) -> Result<usize> {
    if !(eps.is_finite() && eps != 0.0) || eps.signum() != horizon.signum() {
        return Err(OscError::Config(format!(
            "sweep step {eps} is not a valid step for horizon {horizon}"
        )));
    }
    let steps = (horizon / eps).round();
    if steps < 1.0 || !same_horizon(steps * eps, horizon) {
        return Err(OscError::Config(format!(
            "sweep step {eps} does not divide the horizon {horizon}"
        )));
    }
    Ok(steps as usize)
}

fn compare_one(
    config: &RunConfig,
    reference: Reference,
    sweep: Option<&[f64]>,
    horizon: f64,
) -> Result<ComparisonRow> {
    let (error, energy_drift) = error_and_drift(config, reference)?;
    let mut points = Vec::new();
    if let Some(sweep) = sweep {
        for &eps in sweep {
            let steps = sweep_steps(eps, horizon)?;
            let mut c = config.clone();
            c.eps = StepSpec::Constant(eps);
            c.steps = steps;
            let (err, _) = error_and_drift(&c, reference)?;
            points.push(SweepPoint {
                eps,
                steps,
                error: err,
            });
        }
    }
    Ok(ComparisonRow {
        stepper: config.stepper.label(),
        steps: config.steps,
        error,
        energy_drift,
        order: fit_order(&points),
        sweep: points,
    })
}

fn error_and_drift(config: &RunConfig, reference: Reference) -> Result<(f64, Option<f64>)> {
    let mut c = config.clone();
    c.outputs = vec![OutputKind::Trajectory, OutputKind::Summary];
    let out = run(&c)?;
    let reference_traj = reference_nodes(&c, reference, &out.trajectory)?;
    let error = out
        .trajectory
        .rows
        .iter()
        .zip(&reference_traj)
        .flat_map(|(row, (x, v))| {
            let dx = row.x.iter().zip(x).map(|(a, b)| (a - b).abs());
            let dv = row.v.iter().zip(v).map(|(a, b)| (a - b).abs());
            dx.chain(dv).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    Ok((error, out.summary.max_energy_drift))
}

/// Least-squares slope of `ln error` against `ln ε` over points above the
/// rounding floor; `None` with fewer than [`MIN_SWEEP`] such points.
pub fn fit_order(points: &[SweepPoint]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.error > ORDER_FIT_FLOOR * p.steps.max(1) as f64 && p.error.is_finite())
        .map(|p| (p.eps.abs().ln(), p.error.ln()))
        .collect();
    if usable.len() < MIN_SWEEP {
        return None;
    }
    Some(log_log_slope(&usable))
}

/// Ordinary least-squares slope through `(x, y)` pairs.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

type NodeStates = Vec<(Vec<f64>, Vec<f64>)>;

/// Reference `(x, v)` at the nodes of `traj`.
fn reference_nodes(
    config: &RunConfig,
    reference: Reference,
    traj: &Trajectory,
) -> Result<NodeStates> {
    if let (Reference::Exact, Some(kind)) = (reference, exact_stepper(&config.problem)) {
        if kind != config.stepper {
            let mut c = config.clone();
            c.stepper = kind;
            c.outputs = vec![OutputKind::Trajectory];
            let r = run(&c)?;
            return Ok(r
                .trajectory
                .rows
                .into_iter()
                .map(|row| (row.x, row.v))
                .collect());
        }
    }
    analytic_nodes(config, traj)
}

/// The exact map for each problem; nonlinear problems have none.
fn exact_stepper(problem: &ProblemSpec) -> Option<StepperKind> {
    Some(match problem {
        ProblemSpec::Osc1d(_) | ProblemSpec::Kepler(_) => StepperKind::ExactDriven,
        ProblemSpec::Damped1d(_) => StepperKind::ExactDamped,
        ProblemSpec::OscNd(_) => StepperKind::ExactND,
        ProblemSpec::Wave(_) => StepperKind::Recurrence,
        ProblemSpec::Nonlinear1d(_) => return None,
    })
}

/// Closed-form states from the initial condition across the elapsed time.
fn analytic_nodes(config: &RunConfig, traj: &Trajectory) -> Result<NodeStates> {
    let (t0, x0, v0) = config.initial_state();
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    match &config.problem {
        ProblemSpec::Osc1d(spec) | ProblemSpec::Damped1d(spec) => {
            let damped = matches!(config.problem, ProblemSpec::Damped1d(_));
            let start = Phase1D::new(x0[0], v0[0], t0);
            times
                .iter()
                .map(|&t| {
                    let s = if damped {
                        exact_step_damped(start, spec, t - t0)?
                    } else {
                        exact_step(start, spec, t - t0)?
                    };
                    Ok((vec![s.x], vec![s.v]))
                })
                .collect()
        }
        ProblemSpec::OscNd(spec) => {
            let start = PhaseND::new(x0, v0, t0)?;
            times
                .iter()
                .map(|&t| {
                    let s = nd_forced_step(&start, spec, t - t0)?;
                    Ok((s.x, s.v))
                })
                .collect()
        }
        ProblemSpec::Kepler(spec) => {
            let (e, phi0) = spec.conic();
            let g = spec.binet_force();
            let dphi = config.eps.at(0);
            Ok((0..traj.rows.len())
                .map(|n| {
                    let phi = n as f64 * dphi;
                    let du = -g * e * (phi - phi0).sin();
                    (vec![spec.conic_u(phi)], vec![du])
                })
                .collect())
        }
        ProblemSpec::Wave(spec) => {
            let omegas = spec.frequencies();
            Ok(times
                .iter()
                .map(|&t| {
                    let mut x = Vec::with_capacity(2 * omegas.len());
                    let mut v = Vec::with_capacity(2 * omegas.len());
                    for (m, &w) in spec.modes.iter().zip(&omegas) {
                        let (s, c) = (w * t).sin_cos();
                        let u: Complex64 = m.u0 * c + m.udot0 * (s / w);
                        let du: Complex64 = m.u0 * (-w * s) + m.udot0 * c;
                        x.extend([u.re, u.im]);
                        v.extend([du.re, du.im]);
                    }
                    (x, v)
                })
                .collect())
        }
        ProblemSpec::Nonlinear1d(spec) => {
            let pot = spec.potential.build();
            let f = move |_t: f64, y: &[f64]| vec![y[1], -pot.d1(y[0])];
            let max_step = config.eps.at(0).abs().min(1e-3);
            Ok(reference_samples(&f, t0, &[x0[0], v0[0]], &times, max_step)
                .into_iter()
                .map(|y| (vec![y[0]], vec![y[1]]))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn driven(stepper: &str, eps: f64, steps: usize) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{"problem":"osc1d","spec":{{"omega":1.0,"g":0.5}},"stepper":"{stepper}",
                "eps":{eps},"steps":{steps},"initial":{{"x":1.0,"v":0.0}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn exact_rows_have_no_error() {
        let configs = [
            driven("exact_driven", 0.1, 100),
            driven("exponential_euler", 0.1, 100),
        ];
        let table = compare(&configs, Reference::Analytic, None).unwrap();
        for row in &table.rows {
            assert!(row.error < 1e-12, "{}: {}", row.stepper, row.error);
        }
    }

    #[test]
    fn lawson_explicit_is_first_order() {
        let configs = [driven("lawson_explicit", 0.1, 10)];
        let sweep = [0.1, 0.05, 0.025, 0.0125];
        let table = compare(&configs, Reference::Analytic, Some(&sweep)).unwrap();
        let row = &table.rows[0];
        assert!(row.error > 1e-6);
        let errs: Vec<f64> = row.sweep.iter().map(|p| p.error).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!((row.order.unwrap() - 1.0).abs() < 0.15, "{:?}", row.order);
    }

    #[test]
    fn exact_reference_matches_analytic_for_exact_maps() {
        let configs = [driven("trapezoid_form", 0.2, 50)];
        let a = compare(&configs, Reference::Analytic, None).unwrap();
        let e = compare(&configs, Reference::Exact, None).unwrap();
        assert!(a.rows[0].error < 1e-12 && e.rows[0].error < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            compare(&[], Reference::Analytic, None),
            Err(OscError::Config(_))
        ));
        let mismatched = [
            driven("exact_driven", 0.1, 10),
            driven("exact_driven", 0.1, 20),
        ];
        assert!(matches!(
            compare(&mismatched, Reference::Analytic, None),
            Err(OscError::Config(_))
        ));
        let one = [driven("exact_driven", 0.1, 10)];
        assert!(compare(&one, Reference::Analytic, Some(&[0.1, 0.05])).is_err());
        assert!(compare(&one, Reference::Analytic, Some(&[0.1, 0.05, 0.3, 0.025])).is_err());
    }
}

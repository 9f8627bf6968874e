//! End-to-end acceptance checks.
//!
//! Each criterion is a set of measured quantities with a bound. Oracles are
//! closed forms or independent integrations; randomized inputs use fixed
//! seeds so results are reproducible.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apps::{
    kepler_propagate, mode_energy, numerical_frequency, recovered_period, wave_propagate,
    KeplerSpec, WaveMode, WaveSpec,
};
use crate::error::Result;
use crate::exact1d::{
    energy_invariants, exact_step, exact_step_damped, recurrence_step, Osc1DSpec, Phase1D,
};
use crate::exactnd::{
    nd_energy, nd_exact_step, nd_forced_step, nd_recurrence_step, nd_trapezoid_step, Forcing,
    OscNDSpec, ParticularSolution, PhaseND,
};
use crate::geofamily::{
    check_reversibility, continuum_limits, det2, exact_family_params, family_matrix,
    oscillator_matrix, FamilyParams, FamilyRule,
};
use crate::harness::log_log_slope;
use crate::locexact::{discrete_gradient_step, DeltaPolicy, Potential};
use crate::phasefun::SquareMatrix;
use crate::reference::reference_samples;
use crate::refschemes::{
    exponential_euler_step, gautschi_step, lawson_explicit_step, lawson_implicit_step, LinearPart,
    NonlinearForce,
};

/// How a measured value is compared with its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    /// Strictly below.
    Below(f64),
    Within {
        target: f64,
        tol: f64,
    },
}

impl Bound {
    fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Below(b) => v < b,
            Bound::Within { target, tol } => (v - target).abs() <= tol,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bound::AtMost(b) => write!(f, "<= {b:.1e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:.1e}"),
            Bound::Below(b) => write!(f, "< {b:.3e}"),
            Bound::Within { target, tol } => write!(f, "= {target} +/- {tol}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub bound: Bound,
}

impl Check {
    pub fn new(label: impl Into<String>, value: f64, bound: Bound) -> Self {
        Self {
            label: label.into(),
            value,
            bound,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        !self.value.is_nan() && self.bound.holds(self.value)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed() { "ok" } else { "FAIL" };
        write!(
            f,
            "{} = {:.3e} ({} {})",
            self.label, self.value, self.bound, mark
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
    /// Set when the criterion could not be evaluated.
    pub error: Option<String>,
    /// Informational values that carry no bound.
    pub notes: Vec<String>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(Check::passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    /// The single summary line, `PASS [n] title` or `FAIL [n] title`.
    pub fn status_line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        format!("{status} [{:>2}] {}", self.id, self.title)
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.status_line())?;
        if let Some(e) = &self.error {
            writeln!(f, "       error: {e}")?;
        }
        for c in &self.checks {
            writeln!(f, "       {c}")?;
        }
        for n in &self.notes {
            writeln!(f, "       note: {n}")?;
        }
        Ok(())
    }
}

type Outcome = Result<(Vec<Check>, Vec<String>)>;
type Criterion = (&'static str, fn() -> Outcome);

pub const CRITERIA: [Criterion; 12] = [
    ("exactness of the free 1-D map", free_map_exactness),
    ("group law of the exact maps", group_law),
    ("energy constancy and identity chain", energy_constancy),
    (
        "formulation equivalence in n dimensions",
        formulation_equivalence,
    ),
    (
        "multidimensional invariant under variable steps",
        nd_invariant,
    ),
    (
        "exactness of exponential integrators",
        exponential_exactness,
    ),
    (
        "Gautschi degeneracy for constant force",
        gautschi_degeneracy,
    ),
    ("symplectic family", geo_family),
    ("discrete gradient schemes", discrete_gradient),
    ("Kepler orbits", kepler),
    ("wave modes", wave),
    ("particular solutions", particular_solutions),
];

/// Evaluates criterion `id` (1-based).
pub fn evaluate(id: usize) -> Option<CriterionReport> {
    let (title, f) = *CRITERIA.get(id.checked_sub(1)?)?;
    let (checks, notes, error) = match f() {
        Ok((c, n)) => (c, n, None),
        Err(e) => (Vec::new(), Vec::new(), Some(e.to_string())),
    };
    Some(CriterionReport {
        id,
        title,
        checks,
        error,
        notes,
    })
}

pub fn evaluate_all() -> Vec<CriterionReport> {
    (1..=CRITERIA.len()).filter_map(evaluate).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn nd_gap(a: &PhaseND, b: &PhaseND) -> f64 {
    max_abs_diff(&a.x, &b.x).max(max_abs_diff(&a.v, &b.v))
}

fn nd_scale(s: &PhaseND) -> f64 {
    max_abs(&s.x).max(max_abs(&s.v)).max(1.0)
}

/// `B Bᵀ/n + 0.1 I` with entries of `B` uniform in `[−1, 1]`: symmetric
/// with eigenvalues in `[0.1, n + 0.1]`.
fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SquareMatrix {
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    SquareMatrix::from_fn(n, |i, j| {
        let s: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum();
        s / n as f64 + if i == j { 0.1 } else { 0.0 }
    })
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

pub fn free_map_exactness() -> Outcome {
    let spec = Osc1DSpec::free(1.0);
    let eps = 0.3;
    let started = Instant::now();
    let mut s = Phase1D::new(1.0, 0.0, 0.0);
    let mut dev: f64 = 0.0;
    for n in 1..=10_000 {
        s = exact_step(s, &spec, eps)?;
        let t = n as f64 * eps;
        dev = dev.max((s.x - t.cos()).abs()).max((s.v + t.sin()).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    Ok((
        vec![
            Check::new(
                "max deviation from (cos t, -sin t)",
                dev,
                Bound::AtMost(1e-11),
            ),
            Check::new("runtime [s]", elapsed, Bound::Below(1.0)),
        ],
        Vec::new(),
    ))
}

pub fn group_law() -> Outcome {
    let mut r = rng(2);
    let trials = 200;
    let mut free: f64 = 0.0;
    let mut driven: f64 = 0.0;
    let mut damped: f64 = 0.0;
    let mut nd: f64 = 0.0;
    let mut nd_timed: f64 = 0.0;
    for _ in 0..trials {
        let (e1, e2) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let s = Phase1D::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), 0.0);
        let w = r.gen_range(0.1..3.0);
        let g = r.gen_range(-1.0..1.0);
        for (spec, slot) in [
            (Osc1DSpec::free(w), &mut free),
            (Osc1DSpec::driven(w, g), &mut driven),
        ] {
            let two = exact_step(exact_step(s, &spec, e2)?, &spec, e1)?;
            let one = exact_step(s, &spec, e1 + e2)?;
            *slot = slot.max(two.distance(&one) / one.x.abs().max(one.v.abs()).max(1.0));
        }
        let spec = Osc1DSpec::damped(w, r.gen_range(0.0..0.5 * w), g);
        let two = exact_step_damped(exact_step_damped(s, &spec, e2)?, &spec, e1)?;
        let one = exact_step_damped(s, &spec, e1 + e2)?;
        damped = damped.max(two.distance(&one) / one.x.abs().max(one.v.abs()).max(1.0));

        let n = r.gen_range(1..=4);
        let a = random_spd(&mut r, n);
        let state = PhaseND::new(random_vec(&mut r, n), random_vec(&mut r, n), 0.0)?;
        let spec = OscNDSpec::constant(a.clone(), random_vec(&mut r, n))?;
        let two = nd_exact_step(&nd_exact_step(&state, &spec, e2)?, &spec, e1)?;
        let one = nd_exact_step(&state, &spec, e1 + e2)?;
        nd = nd.max(nd_gap(&two, &one) / nd_scale(&one));

        let spec = OscNDSpec::new(
            a,
            Forcing::Sinusoidal {
                f0: random_vec(&mut r, n),
                omega_f: r.gen_range(0.05..0.3),
            },
        )?;
        let two = nd_forced_step(&nd_forced_step(&state, &spec, e2)?, &spec, e1)?;
        let one = nd_forced_step(&state, &spec, e1 + e2)?;
        nd_timed = nd_timed.max(nd_gap(&two, &one) / nd_scale(&one));
    }
    let tol = Bound::AtMost(1e-12);
    Ok((
        vec![
            Check::new("free", free, tol),
            Check::new("driven", driven, tol),
            Check::new("damped", damped, tol),
            Check::new("n-D constant force", nd, tol),
            Check::new("n-D sinusoidal force", nd_timed, tol),
        ],
        vec![format!(
            "{trials} random trials per variant, error relative to max(1, |state|)"
        )],
    ))
}

pub fn energy_constancy() -> Outcome {
    let mut checks = Vec::new();
    for (name, spec) in [
        ("free", Osc1DSpec::free(1.3)),
        ("driven", Osc1DSpec::driven(1.3, 0.4)),
    ] {
        let eps = 0.37;
        let mut prev = Phase1D::new(0.6, -0.2, 0.0);
        let mut next = exact_step(prev, &spec, eps)?;
        let e_start = energy_invariants(prev.x, next.x, &spec, eps)?.as_array();
        let mut drift = [0.0f64; 4];
        for _ in 0..10_000 {
            prev = next;
            next = exact_step(prev, &spec, eps)?;
            let e = energy_invariants(prev.x, next.x, &spec, eps)?.as_array();
            for k in 0..4 {
                drift[k] = drift[k].max((e[k] - e_start[k]).abs());
            }
        }
        for (k, d) in drift.iter().enumerate() {
            checks.push(Check::new(
                format!("{name} E{k} drift"),
                *d,
                Bound::AtMost(1e-11),
            ));
        }
    }

    let mut r = rng(3);
    let mut worst = [0.0f64; 3];
    for _ in 0..500 {
        let w = r.gen_range(0.3..2.0);
        let eps = r.gen_range(0.05..1.0);
        let g = r.gen_range(-1.0..1.0);
        let spec = Osc1DSpec::driven(w, g);
        let q = energy_invariants(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), &spec, eps)?;
        let half = 0.5 * w * eps;
        let k1 = 0.5 * (w / (2.0 * half.sin())).powi(2);
        let t2 = half.tan().powi(2);
        let shift = 0.5 * (g / w * half.tan()).powi(2);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        worst[0] = worst[0].max(rel(q.e1, k1 * q.e0));
        worst[1] = worst[1].max(rel(q.e2, (1.0 + t2) * q.e1));
        worst[2] = worst[2].max(rel(q.e3, q.e2 + shift));
    }
    checks.push(Check::new(
        "E1 = (w/(2 sin(we/2)))^2 E0 / 2",
        worst[0],
        Bound::AtMost(1e-12),
    ));
    checks.push(Check::new(
        "E2 = (1 + tan^2(we/2)) E1",
        worst[1],
        Bound::AtMost(1e-12),
    ));
    checks.push(Check::new(
        "E3 = E2 + (g/w tan(we/2))^2 / 2",
        worst[2],
        Bound::AtMost(1e-12),
    ));
    Ok((
        checks,
        vec![
            "the E3 - E2 shift carries a factor 1/2 implied by the definitions of E2 and E3".into(),
        ],
    ))
}

pub fn formulation_equivalence() -> Outcome {
    let mut r = rng(4);
    let mut mat_trap_var: f64 = 0.0;
    let mut mat_trap: f64 = 0.0;
    let mut mat_rec: f64 = 0.0;
    let mut trap_rec: f64 = 0.0;
    for _ in 0..100 {
        let n = r.gen_range(1..=4);
        let a = random_spd(&mut r, n);
        let spec = OscNDSpec::constant(a, random_vec(&mut r, n))?;
        let start = PhaseND::new(random_vec(&mut r, n), random_vec(&mut r, n), 0.0)?;

        let (mut m, mut t) = (start.clone(), start.clone());
        for _ in 0..20 {
            let eps = r.gen_range(0.05..0.5);
            m = nd_exact_step(&m, &spec, eps)?;
            t = nd_trapezoid_step(&t, &spec, eps)?;
            mat_trap_var = mat_trap_var.max(nd_gap(&m, &t) / nd_scale(&m));
        }

        let eps = r.gen_range(0.05..0.5);
        let mut ms = vec![start.clone()];
        let mut ts = vec![start.clone()];
        for k in 0..20 {
            ms.push(nd_exact_step(&ms[k], &spec, eps)?);
            ts.push(nd_trapezoid_step(&ts[k], &spec, eps)?);
            mat_trap = mat_trap.max(nd_gap(&ms[k + 1], &ts[k + 1]) / nd_scale(&ms[k + 1]));
        }
        let mut xs = vec![ms[0].x.clone(), ms[1].x.clone()];
        for k in 1..20 {
            let next = nd_recurrence_step(&xs[k], &xs[k - 1], &spec, eps)?;
            xs.push(next);
        }
        for k in 0..=20 {
            let sc = max_abs(&ms[k].x).max(1.0);
            mat_rec = mat_rec.max(max_abs_diff(&ms[k].x, &xs[k]) / sc);
            trap_rec = trap_rec.max(max_abs_diff(&ts[k].x, &xs[k]) / sc);
        }
    }
    let tol = Bound::AtMost(1e-12);
    Ok((
        vec![
            Check::new("matrix vs trapezoid, variable steps", mat_trap_var, tol),
            Check::new("matrix vs trapezoid, constant step", mat_trap, tol),
            Check::new("matrix vs recurrence", mat_rec, tol),
            Check::new("trapezoid vs recurrence", trap_rec, tol),
        ],
        vec!["100 random symmetric Omega^2 with n <= 4, 20 steps each".into()],
    ))
}

pub fn nd_invariant() -> Outcome {
    let mut r = rng(5);
    let n = 3;
    let spec = OscNDSpec::constant(random_spd(&mut r, n), random_vec(&mut r, n))?;
    let mut s = PhaseND::new(random_vec(&mut r, n), random_vec(&mut r, n), 0.0)?;
    let i0 = nd_energy(&s, &spec)?;
    let mut drift: f64 = 0.0;
    for _ in 0..10_000 {
        s = nd_exact_step(&s, &spec, r.gen_range(0.05..0.3))?;
        drift = drift.max((nd_energy(&s, &spec)? - i0).abs());
    }
    Ok((
        vec![Check::new(
            "I_n drift over 1e4 variable steps",
            drift,
            Bound::AtMost(1e-11),
        )],
        vec![format!("I_0 = {i0:.6}")],
    ))
}

pub fn exponential_exactness() -> Outcome {
    let omega = 1.0;
    let eps = 0.5;
    let lin = LinearPart::oscillator(omega);
    let start = [0.8, -0.3];
    let run = |g: f64, scheme: usize| -> Result<f64> {
        let spec = Osc1DSpec::driven(omega, g);
        let force = NonlinearForce::constant(vec![0.0, g]);
        let mut y = start.to_vec();
        let mut exact = Phase1D::new(start[0], start[1], 0.0);
        let mut err: f64 = 0.0;
        for _ in 0..100 {
            y = match scheme {
                0 => lawson_explicit_step(&y, &lin, eps, &force)?,
                1 => lawson_implicit_step(&y, &lin, eps, &force)?,
                _ => exponential_euler_step(&y, &lin, eps, &force)?,
            };
            exact = exact_step(exact, &spec, eps)?;
            err = err.max((y[0] - exact.x).abs()).max((y[1] - exact.v).abs());
        }
        Ok(err)
    };
    let names = ["explicit Lawson", "implicit Lawson", "exponential Euler"];
    let mut checks = Vec::new();
    for (k, name) in names.iter().enumerate() {
        checks.push(Check::new(
            format!("{name}, g = 0"),
            run(0.0, k)?,
            Bound::AtMost(1e-12),
        ));
    }
    let g = 0.7;
    checks.push(Check::new(
        "exponential Euler, g = 0.7",
        run(g, 2)?,
        Bound::AtMost(1e-12),
    ));
    for (k, name) in names.iter().take(2).enumerate() {
        checks.push(Check::new(
            format!("{name}, g = 0.7"),
            run(g, k)?,
            Bound::AtLeast(1e-6),
        ));
    }
    Ok((checks, vec!["omega eps = 0.5, 100 steps".into()]))
}

pub fn gautschi_degeneracy() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let w = r.gen_range(0.2..3.0);
        let eps = r.gen_range(0.01..1.0);
        let g = r.gen_range(-2.0..2.0);
        let (x, xp) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let spec = Osc1DSpec::driven(w, g);
        let force = NonlinearForce::constant(vec![g]);
        let a = gautschi_step(&[x], &[xp], w, eps, &force)?[0];
        let b = recurrence_step(x, xp, &spec, eps)?;
        worst = worst.max((a - b).abs());
    }
    Ok((
        vec![Check::new(
            "max per-step difference",
            worst,
            Bound::AtMost(1e-13),
        )],
        vec!["500 random (omega, eps, g, x_n, x_{n-1})".into()],
    ))
}

pub fn geo_family() -> Outcome {
    let mut r = rng(8);
    let mut det_err: f64 = 0.0;
    for _ in 0..500 {
        let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let p = FamilyParams {
            alpha: sign * r.gen_range(0.5..2.0),
            beta: r.gen_range(-2.0..2.0),
            gamma: r.gen_range(-2.0..2.0),
            eps: 0.1,
        };
        det_err = det_err.max((det2(&family_matrix(&p)?) - 1.0).abs());
    }
    let mut checks = vec![Check::new(
        "max |det A - 1|, 500 triples",
        det_err,
        Bound::AtMost(1e-14),
    )];

    let mut rev_bad = 0.0;
    let mut mat_err: f64 = 0.0;
    for &(m, w, eps) in &[
        (1.0, 1.0, 0.3),
        (2.5, 0.7, 1.1),
        (0.4, 3.0, -0.45),
        (1.0, 2.0, 1.4),
    ] {
        let rep = check_reversibility(&FamilyRule::exact(m, w), eps)?;
        if !rep.reversible {
            rev_bad += 1.0;
        }
        let a = family_matrix(&exact_family_params(m, w, eps)?)?;
        let o = oscillator_matrix(m, w, eps);
        for i in 0..2 {
            for j in 0..2 {
                mat_err = mat_err.max((a[i][j] - o[i][j]).abs());
            }
        }
    }
    checks.push(Check::new(
        "exact rules failing reversibility",
        rev_bad,
        Bound::AtMost(0.0),
    ));
    checks.push(Check::new(
        "exact parameters vs oscillator matrix",
        mat_err,
        Bound::AtMost(1e-13),
    ));

    let mut limit_err: f64 = 0.0;
    for &(m, w) in &[(1.0, 1.0), (2.0, 0.5), (0.3, 2.5)] {
        for rule in [FamilyRule::exact(m, w), FamilyRule::symmetric_euler(m, w)] {
            let [ea, eb, c] = continuum_limits(&rule);
            limit_err = limit_err
                .max((ea - m).abs())
                .max((eb - m).abs())
                .max((c - w * w).abs());
        }
    }
    checks.push(Check::new(
        "continuum limits (eps alpha, eps beta, (2 - gamma)/eps^2) -> (m, m, omega^2)",
        limit_err,
        Bound::AtMost(1e-6),
    ));
    Ok((checks, Vec::new()))
}

pub fn discrete_gradient() -> Outcome {
    let pot = Potential::pendulum(1.0);
    let policies = [
        DeltaPolicy::StandardEps,
        DeltaPolicy::LocalAtXn,
        DeltaPolicy::LocalAtMidpoint,
    ];
    let mut checks = Vec::new();
    for policy in policies {
        let mut s = Phase1D::new(2.0, 0.0, 0.0);
        let e0 = pot.energy(&s);
        let mut drift: f64 = 0.0;
        for _ in 0..10_000 {
            s = discrete_gradient_step(s, &pot, 0.1, policy)?;
            drift = drift.max((pot.energy(&s) - e0).abs());
        }
        checks.push(Check::new(
            format!("pendulum energy drift, {policy:?}"),
            drift,
            Bound::AtMost(1e-12),
        ));
    }

    let (w2, b) = (2.25, 0.4);
    let quad = Potential::quadratic(w2, b);
    let spec = Osc1DSpec::driven(w2.sqrt(), -b);
    let mut s = Phase1D::new(0.7, -0.5, 0.0);
    let mut e = s;
    let mut gap: f64 = 0.0;
    for _ in 0..1000 {
        s = discrete_gradient_step(s, &quad, 0.3, DeltaPolicy::LocalAtXn)?;
        e = exact_step(e, &spec, 0.3)?;
        gap = gap.max(s.distance(&e));
    }
    checks.push(Check::new(
        "LocalAtXn vs exact flow, quadratic",
        gap,
        Bound::AtMost(1e-12),
    ));

    let eps = 0.1;
    let steps = 100;
    let start = Phase1D::new(1.0, 0.0, 0.0);
    let times: Vec<f64> = (1..=steps).map(|n| n as f64 * eps).collect();
    let osc = pot.clone();
    let f = move |_t: f64, y: &[f64]| vec![y[1], -osc.d1(y[0])];
    let reference = reference_samples(&f, 0.0, &[start.x, start.v], &times, 1e-3);
    let global = |policy| -> Result<f64> {
        let mut s = start;
        let mut err: f64 = 0.0;
        for y in &reference {
            s = discrete_gradient_step(s, &pot, eps, policy)?;
            err = err.max((s.x - y[0]).abs()).max((s.v - y[1]).abs());
        }
        Ok(err)
    };
    let standard = global(DeltaPolicy::StandardEps)?;
    let midpoint = global(DeltaPolicy::LocalAtMidpoint)?;
    checks.push(Check::new(
        "LocalAtMidpoint global error on [0, 10]",
        midpoint,
        Bound::Below(standard),
    ));
    Ok((
        checks,
        vec![format!(
            "StandardEps error {standard:.3e}, LocalAtMidpoint error {midpoint:.3e}, ratio {:.1}",
            standard / midpoint
        )],
    ))
}

pub fn kepler() -> Outcome {
    let (m, k, l, e) = (1.0, 1.0, 1.0, 0.5);
    let steps = 400;
    let spec = KeplerSpec::from_eccentricity(m, k, l, e, 2.0 * PI / steps as f64, steps);
    let orbit = kepler_propagate(&spec)?;
    let conic = orbit
        .iter()
        .map(|s| (s.u - spec.conic_u(s.phi)).abs())
        .fold(0.0, f64::max);
    let last = orbit[steps];
    let closure = (last.u - spec.u0).abs().max((last.du - spec.du0).abs());

    let period = spec.period()?;
    let sweep = [8usize, 16, 32, 64];
    let mut points = Vec::new();
    let mut notes = Vec::new();
    for &n in &sweep {
        let err = (recovered_period(m, k, l, e, n)? - period).abs();
        notes.push(format!("N = {n:>3}: period error {err:.3e}"));
        // an exact zero is floored at one ulp of the period so the fit is defined
        let err = err.max(f64::EPSILON * period);
        points.push(((2.0 * PI / n as f64).ln(), err.ln()));
    }
    let slope = log_log_slope(&points);
    notes.push(format!("analytic period {period:.15}"));
    notes.push(
        "the trapezoid rule on the smooth periodic r^2(phi) converges geometrically, \
         so the error reaches rounding level before any algebraic slope can be fitted"
            .into(),
    );
    Ok((
        vec![
            Check::new("max |u_n - conic(phi_n)|", conic, Bound::AtMost(1e-12)),
            Check::new("closure after 2 pi", closure, Bound::AtMost(1e-11)),
            Check::new(
                "period convergence slope",
                slope,
                Bound::Within {
                    target: 2.0,
                    tol: 0.1,
                },
            ),
        ],
        notes,
    ))
}

pub fn wave() -> Outcome {
    let spec = WaveSpec {
        a: 0.7,
        modes: (1..=6)
            .map(|k| WaveMode {
                k: k as f64,
                u0: Complex64::new(1.0 / k as f64, 0.3),
                udot0: Complex64::new(-0.2, 0.5 / k as f64),
            })
            .collect(),
        dt: 0.05,
        steps: 10_000,
        grid: None,
        length: 2.0 * PI,
    };
    let res = wave_propagate(&spec)?;
    let mut freq: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for (h, &w) in res.history.iter().zip(&res.omegas) {
        freq = freq.max((numerical_frequency(h, spec.dt)? - w).abs());
        let en = mode_energy(h, w, spec.dt)?;
        let d = en.iter().map(|x| (x - en[0]).abs()).fold(0.0, f64::max);
        drift = drift.max(d);
    }
    Ok((
        vec![
            Check::new(
                "max |omega_num - sqrt(k^2 + a^2)|",
                freq,
                Bound::AtMost(1e-12),
            ),
            Check::new("max per-mode energy drift", drift, Bound::AtMost(1e-11)),
        ],
        vec!["6 modes, a = 0.7, dt = 0.05, 1e4 steps".into()],
    ))
}

pub fn particular_solutions() -> Outcome {
    let mut r = rng(12);
    let n = 3;
    let a = random_spd(&mut r, n);
    let forcings = [
        (
            "constant",
            Forcing::Constant {
                a: random_vec(&mut r, n),
            },
        ),
        (
            "polynomial",
            Forcing::Polynomial {
                coeffs: vec![
                    random_vec(&mut r, n),
                    random_vec(&mut r, n),
                    random_vec(&mut r, n),
                ],
            },
        ),
        (
            "exponential",
            Forcing::Exponential {
                f0: random_vec(&mut r, n),
                alpha: 0.6,
            },
        ),
        (
            "sinusoidal",
            Forcing::Sinusoidal {
                f0: random_vec(&mut r, n),
                omega_f: 2.7,
            },
        ),
        (
            "sum",
            Forcing::Sum {
                terms: vec![
                    Forcing::Exponential {
                        f0: random_vec(&mut r, n),
                        alpha: -0.4,
                    },
                    Forcing::Sinusoidal {
                        f0: random_vec(&mut r, n),
                        omega_f: 0.2,
                    },
                ],
            },
        ),
    ];
    let mut checks = Vec::new();
    let h = 1e-3;
    for (name, forcing) in &forcings {
        let ps = ParticularSolution::new(forcing, &a)?;
        let mut analytic: f64 = 0.0;
        let mut fd: f64 = 0.0;
        for _ in 0..100 {
            let t = r.gen_range(-2.0..2.0);
            let f = forcing.eval(n, t);
            let phi = ps.derivative(t, 0);
            let a_phi = a.mul_vec(&phi);
            let scale = max_abs(&f).max(max_abs(&a_phi)).max(1.0);
            let acc = ps.derivative(t, 2);
            let lhs: Vec<f64> = acc.iter().zip(&a_phi).map(|(x, y)| x + y).collect();
            analytic = analytic.max(max_abs_diff(&lhs, &f) / scale);

            let (p, q) = (ps.derivative(t + h, 0), ps.derivative(t - h, 0));
            let lhs: Vec<f64> = (0..n)
                .map(|i| (p[i] - 2.0 * phi[i] + q[i]) / (h * h) + a_phi[i])
                .collect();
            fd = fd.max(max_abs_diff(&lhs, &f) / scale);
        }
        checks.push(Check::new(
            format!("{name}, analytic"),
            analytic,
            Bound::AtMost(1e-10),
        ));
        checks.push(Check::new(
            format!("{name}, finite difference"),
            fd,
            Bound::AtMost(1e-6),
        ));
    }
    Ok((checks, vec!["100 random t in [-2, 2] per class".into()]))
}

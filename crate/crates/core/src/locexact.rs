//! Energy-preserving discrete gradient scheme for `ẍ = −Φ′(x)` with an
//! adjustable effective step `δₙ`:
//!
//! ```text
//! (v' − v)/δ = −(Φ(x') − Φ(x))/(x' − x)
//! (v' + v)/2 = (x' − x)/δ
//! ```
//!
//! Any `δ > 0` conserves `½v² + Φ(x)` exactly. Choosing `δ` from the local
//! frequency `ω² = Φ″(x̄)` makes the step exact for the linearization at
//! `x̄`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{OscError, Result};
use crate::exact1d::{Phase1D, RESONANCE_TOL};
use crate::refschemes::NonlinearForce;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A potential with its first two derivatives.
#[derive(Clone)]
pub struct Potential {
    value: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").finish_non_exhaustive()
    }
}

/// Points at which derivatives are checked against finite differences.
const CHECK_POINTS: [f64; 5] = [-1.3, -0.4, 0.0, 0.7, 1.9];
const CHECK_TOL: f64 = 1e-6;

impl Potential {
    /// Builds a potential, checking `Φ′` and `Φ″` against central
    /// differences of `Φ` and `Φ′`.
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let pot = Self {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        };
        pot.check_derivatives(&CHECK_POINTS)?;
        Ok(pot)
    }

    pub fn check_derivatives(&self, points: &[f64]) -> Result<()> {
        let h = 1e-4;
        for &x in points {
            let fd1 = (self.value(x + h) - self.value(x - h)) / (2.0 * h);
            let fd2 = (self.d1(x + h) - self.d1(x - h)) / (2.0 * h);
            let (p1, p2) = (self.d1(x), self.d2(x));
            if !(p1.is_finite() && p2.is_finite()) {
                return Err(OscError::Domain(format!(
                    "potential derivatives not finite at {x}"
                )));
            }
            if (fd1 - p1).abs() > CHECK_TOL * (1.0 + p1.abs()) {
                return Err(OscError::Domain(format!(
                    "first derivative inconsistent at x = {x}: {p1} vs finite difference {fd1}"
                )));
            }
            if (fd2 - p2).abs() > CHECK_TOL * (1.0 + p2.abs()) {
                return Err(OscError::Domain(format!(
                    "second derivative inconsistent at x = {x}: {p2} vs finite difference {fd2}"
                )));
            }
        }
        Ok(())
    }

    /// `Φ(x) = ½ω²x² + b x`
    pub fn quadratic(omega2: f64, linear: f64) -> Self {
        Self {
            value: Arc::new(move |x| 0.5 * omega2 * x * x + linear * x),
            d1: Arc::new(move |x| omega2 * x + linear),
            d2: Arc::new(move |_| omega2),
        }
    }

    /// `Φ(x) = −ω₀² cos x`
    pub fn pendulum(omega2: f64) -> Self {
        Self {
            value: Arc::new(move |x| -omega2 * x.cos()),
            d1: Arc::new(move |x| omega2 * x.sin()),
            d2: Arc::new(move |x| omega2 * x.cos()),
        }
    }

    /// `Φ(x) = ½ω²x² + ¼κx⁴`
    pub fn quartic(omega2: f64, kappa: f64) -> Self {
        Self {
            value: Arc::new(move |x| 0.5 * omega2 * x * x + 0.25 * kappa * x.powi(4)),
            d1: Arc::new(move |x| omega2 * x + kappa * x.powi(3)),
            d2: Arc::new(move |x| omega2 + 3.0 * kappa * x * x),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    /// `½v² + Φ(x)`
    pub fn energy(&self, state: &Phase1D) -> f64 {
        0.5 * state.v * state.v + self.value(state.x)
    }

    /// `ẍ = −Φ′(x)` as a first-order field on `(x, v)`.
    pub fn acceleration(&self, x: f64) -> f64 {
        -self.d1(x)
    }
}

/// Serializable description of the built-in potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    Quadratic {
        omega2: f64,
        #[serde(default)]
        linear: f64,
    },
    Pendulum {
        #[serde(default = "one")]
        omega2: f64,
    },
    Quartic {
        omega2: f64,
        kappa: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PotentialSpec::Quadratic { omega2, linear } => omega2.is_finite() && linear.is_finite(),
            PotentialSpec::Pendulum { omega2 } => omega2.is_finite(),
            PotentialSpec::Quartic { omega2, kappa } => omega2.is_finite() && kappa.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(OscError::Domain(
                "potential parameters must be finite".into(),
            ))
        }
    }

    pub fn build(&self) -> Potential {
        match *self {
            PotentialSpec::Quadratic { omega2, linear } => Potential::quadratic(omega2, linear),
            PotentialSpec::Pendulum { omega2 } => Potential::pendulum(omega2),
            PotentialSpec::Quartic { omega2, kappa } => Potential::quartic(omega2, kappa),
        }
    }

    /// Splits `−Φ′(x) = −ω²x + g(x)` with `ω² = Φ″(0)`, the form used by the
    /// Gautschi and exponential schemes.
    pub fn linear_split(&self) -> Result<(f64, NonlinearForce)> {
        let pot = self.build();
        let omega2 = pot.d2(0.0);
        if !(omega2 > 0.0) {
            return Err(OscError::Domain(format!(
                "linear split needs a positive curvature at 0, got {omega2}"
            )));
        }
        let g =
            NonlinearForce::new(move |x| x.iter().map(|&xi| -pot.d1(xi) + omega2 * xi).collect());
        Ok((omega2.sqrt(), g))
    }
}

/// How `δₙ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    /// `δ = ε`, the plain discrete gradient scheme.
    StandardEps,
    /// `δ` from `Φ″(xₙ)`.
    LocalAtXn,
    /// `δ` from `Φ″(½(xₙ + xₙ₊₁))`, refreshed during the solve.
    LocalAtMidpoint,
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, eight points.
const GL_NODES: [(f64, f64); 8] = {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let mut out = [(0.0, 0.0); 8];
    let mut i = 0;
    while i < 4 {
        out[2 * i] = (0.5 * (1.0 - X[i]), 0.5 * W[i]);
        out[2 * i + 1] = (0.5 * (1.0 + X[i]), 0.5 * W[i]);
        i += 1;
    }
    out
};

/// Below this separation, relative to `1 + |a|`, the quotient is taken
/// from `∫₀¹ Φ′(a + s(b − a)) ds` instead of the subtraction, which loses
/// digits as `b → a`.
const QUADRATURE_SPAN: f64 = 0.1;

/// Divided difference `(Φ(b) − Φ(a))/(b − a)`.
///
/// Close points use the equivalent integral of `Φ′` by Gauss–Legendre
/// quadrature so the value stays accurate as `b → a`.
pub fn discrete_gradient_quotient(pot: &Potential, x_a: f64, x_b: f64) -> f64 {
    let d = x_b - x_a;
    if d.abs() < QUADRATURE_SPAN * (1.0 + x_a.abs()) {
        GL_NODES.iter().map(|&(s, w)| w * pot.d1(x_a + s * d)).sum()
    } else {
        (pot.value(x_b) - pot.value(x_a)) / d
    }
}

/// `∂/∂b` of the divided difference.
fn quotient_slope(pot: &Potential, x_a: f64, x_b: f64) -> f64 {
    let d = x_b - x_a;
    if d.abs() < QUADRATURE_SPAN * (1.0 + x_a.abs()) {
        GL_NODES
            .iter()
            .map(|&(s, w)| w * s * pot.d2(x_a + s * d))
            .sum()
    } else {
        (pot.d1(x_b) - discrete_gradient_quotient(pot, x_a, x_b)) / d
    }
}

/// `δ = (2/ω) tan(ωε/2)` for `ω² = Φ″(x̄)`.
///
/// `Φ″(x̄) = 0` gives `ε`; `Φ″(x̄) < 0` gives `(2/μ) tanh(με/2)` with
/// `μ² = −Φ″(x̄)`.
pub fn local_delta(pot: &Potential, xbar: f64, eps: f64) -> Result<f64> {
    Ok(delta_for_curvature(pot.d2(xbar), eps)?.0)
}

/// `δ(ω², ε)` and whether the non-oscillatory continuation was used.
pub fn delta_for_curvature(omega2: f64, eps: f64) -> Result<(f64, bool)> {
    if !(omega2.is_finite() && eps.is_finite()) {
        return Err(OscError::Domain(format!(
            "curvature {omega2} and step {eps} must be finite"
        )));
    }
    if omega2 > 0.0 {
        let w = omega2.sqrt();
        let half = 0.5 * w * eps;
        if (w * eps).abs() >= PI || half.cos().abs() < RESONANCE_TOL {
            return Err(OscError::ResonantStep(format!(
                "local frequency omega = {w:.6e} with eps = {eps} gives omega*eps = {:.6} >= pi",
                w * eps.abs()
            )));
        }
        Ok((2.0 / w * half.tan(), false))
    } else if omega2 < 0.0 {
        let mu = (-omega2).sqrt();
        Ok((2.0 / mu * (0.5 * mu * eps).tanh(), true))
    } else {
        Ok((eps, true))
    }
}

/// Diagnostics of one discrete gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub iterations: usize,
    pub delta: f64,
    /// `Φ″(x̄) ≤ 0` continuation taken for the final `δ`.
    pub continued: bool,
    pub newton: bool,
    pub residual: f64,
}

pub const DG_MAX_ITER: usize = 100;
pub const DG_TOL: f64 = 1e-13;

pub fn discrete_gradient_step(
    state: Phase1D,
    pot: &Potential,
    eps: f64,
    policy: DeltaPolicy,
) -> Result<Phase1D> {
    Ok(discrete_gradient_step_with_info(state, pot, eps, policy)?.0)
}

/// One step of the modified discrete gradient scheme.
///
/// Eliminating `v'` leaves the scalar equation
///
/// ```text
/// R(x') = x' − x − δv + ½δ² Q(x, x') = 0
/// ```
///
/// solved by fixed-point sweeps from the linearized predictor, with Newton
/// steps when the sweeps stall. `v' = v − δQ` is then taken from the first
/// equation, which keeps the energy error at the level of the residual
/// times `Q`.
///
/// Negative steps are accepted so the map can be inverted.
pub fn discrete_gradient_step_with_info(
    state: Phase1D,
    pot: &Potential,
    eps: f64,
    policy: DeltaPolicy,
) -> Result<(Phase1D, StepInfo)> {
    if !state.is_finite() || !eps.is_finite() {
        return Err(OscError::Domain("state and step must be finite".into()));
    }
    let (x, v) = (state.x, state.v);
    let delta_at = |x_next: f64| -> Result<(f64, bool)> {
        match policy {
            DeltaPolicy::StandardEps => Ok((eps, false)),
            DeltaPolicy::LocalAtXn => delta_for_curvature(pot.d2(x), eps),
            DeltaPolicy::LocalAtMidpoint => delta_for_curvature(pot.d2(0.5 * (x + x_next)), eps),
        }
    };
    let residual = |x_next: f64, delta: f64| -> f64 {
        x_next - x - delta * v + 0.5 * delta * delta * discrete_gradient_quotient(pot, x, x_next)
    };

    // exact solution of the trapezoid form linearized at x
    let (d0, _) = delta_at(x)?;
    let h = 0.5 * d0;
    let mut xn = x + d0 * (v - h * pot.d1(x)) / (1.0 + h * h * pot.d2(x));
    if !xn.is_finite() {
        xn = x + d0 * v;
    }

    let scale = 1.0 + x.abs() + (eps * v).abs();
    let mut newton = false;
    let mut iterations = 0;
    let (mut delta, mut continued) = delta_at(xn)?;
    let mut r = residual(xn, delta);
    // iterate to the rounding floor: stopping at a fixed tolerance leaves a
    // residual of consistent sign, which accumulates as energy drift
    while iterations < DG_MAX_ITER && r != 0.0 {
        iterations += 1;
        let candidate = if newton {
            let slope = 1.0 + 0.5 * delta * delta * quotient_slope(pot, x, xn);
            xn - r / slope
        } else {
            x + delta * v - 0.5 * delta * delta * discrete_gradient_quotient(pot, x, xn)
        };
        let (d_new, c_new) = delta_at(candidate)?;
        let r_new = residual(candidate, d_new);
        if !r_new.is_finite() {
            return Err(OscError::NonConvergence {
                solver: "discrete gradient",
                iterations,
                residual: r_new,
            });
        }
        if r_new.abs() >= r.abs() {
            if r.abs() <= DG_TOL * scale {
                break;
            }
            if !newton {
                newton = true;
                continue;
            }
        }
        xn = candidate;
        delta = d_new;
        continued = c_new;
        r = r_new;
    }
    if r.abs() > DG_TOL * scale {
        return Err(OscError::NonConvergence {
            solver: "discrete gradient",
            iterations,
            residual: r.abs(),
        });
    }
    let q = discrete_gradient_quotient(pot, x, xn);
    let next = Phase1D {
        x: xn,
        v: v - delta * q,
        t: state.t + eps,
    };
    Ok((
        next,
        StepInfo {
            iterations,
            delta,
            continued,
            newton,
            residual: r.abs(),
        },
    ))
}

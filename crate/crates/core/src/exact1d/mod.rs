//! Exact steppers for the scalar oscillator `ẍ + ω²x = g` and the damped
//! oscillator `ẍ = −ω₀²x − 2γẋ − g`.
//!
//! The two source equations use opposite signs for the constant force. Each
//! operation keeps the sign of its own equation: a damped spec with `g`
//! at `γ = 0` is the undamped spec with force `−g`.

mod energy;

use serde::{Deserialize, Serialize};

use crate::error::{OscError, Result};

pub use energy::{energy_invariants, EnergyQuad};

/// `|sin ωε|` below this is treated as a resonant step.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Position, velocity and time of a scalar oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase1D {
    pub x: f64,
    pub v: f64,
    #[serde(default)]
    pub t: f64,
}

impl Phase1D {
    pub fn new(x: f64, v: f64, t: f64) -> Self {
        Self { x, v, t }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.t.is_finite()
    }

    /// Largest of the position and velocity differences.
    pub fn distance(&self, other: &Phase1D) -> f64 {
        (self.x - other.x).abs().max((self.v - other.v).abs())
    }
}

fn default_mass() -> f64 {
    1.0
}

/// Scalar oscillator parameters.
///
/// For the damped stepper `omega` is the undamped frequency `ω₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Osc1DSpec {
    pub omega: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub g: f64,
    #[serde(default = "default_mass")]
    pub m: f64,
}

impl Osc1DSpec {
    pub fn free(omega: f64) -> Self {
        Self {
            omega,
            gamma: 0.0,
            g: 0.0,
            m: 1.0,
        }
    }

    pub fn driven(omega: f64, g: f64) -> Self {
        Self {
            g,
            ..Self::free(omega)
        }
    }

    pub fn damped(omega0: f64, gamma: f64, g: f64) -> Self {
        Self {
            omega: omega0,
            gamma,
            g,
            m: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(OscError::Domain(format!(
                "omega must be positive and finite, got {}",
                self.omega
            )));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(OscError::Domain(format!(
                "mass must be positive, got {}",
                self.m
            )));
        }
        if !(self.g.is_finite() && self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(OscError::Domain(
                "g must be finite and gamma finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Equilibrium `g/ω²` of the undamped driven oscillator.
    pub fn equilibrium(&self) -> f64 {
        self.g / (self.omega * self.omega)
    }

    /// Continuum energy per unit mass `½v² + ½ω²x² − g x`.
    pub fn energy(&self, x: f64, v: f64) -> f64 {
        0.5 * v * v + 0.5 * self.omega * self.omega * x * x - self.g * x
    }
}

fn check_step(eps: f64) -> Result<()> {
    if eps.is_finite() {
        Ok(())
    } else {
        Err(OscError::Domain(format!("step must be finite, got {eps}")))
    }
}

/// Exact flow of `ẍ + ω²x = g` over a step `eps` of either sign.
///
/// `(x − g/ω², v)` is rotated by the phase `ωε`, so any sequence of calls
/// with varying steps samples the continuous solution.
pub fn exact_step(state: Phase1D, spec: &Osc1DSpec, eps: f64) -> Result<Phase1D> {
    spec.validate()?;
    check_step(eps)?;
    let w = spec.omega;
    let (sn, cs) = (w * eps).sin_cos();
    let xe = spec.equilibrium();
    let dx = state.x - xe;
    Ok(Phase1D {
        x: xe + (dx * cs + (sn / w) * state.v),
        v: state.v * cs - (w * dx) * sn,
        t: state.t + eps,
    })
}

/// Exact flow of the underdamped oscillator `ẍ = −ω₀²x − 2γẋ − g`.
///
/// With `ω² = ω₀² − γ²` and `x_e = −g/ω₀²`,
///
/// ```text
/// x' = x_e + e^{−γε} ((x − x_e)(cos ωε + γ/ω sin ωε) + v sin ωε / ω)
/// v' = e^{−γε} (v (cos ωε − γ/ω sin ωε) − (ω + γ²/ω)(x − x_e) sin ωε)
/// ```
pub fn exact_step_damped(state: Phase1D, spec: &Osc1DSpec, eps: f64) -> Result<Phase1D> {
    spec.validate()?;
    check_step(eps)?;
    let w0 = spec.omega;
    let gamma = spec.gamma;
    let disc = w0 * w0 - gamma * gamma;
    if disc <= 0.0 {
        return Err(OscError::NotUnderdamped { discriminant: disc });
    }
    let w = disc.sqrt();
    let (sn, cs) = (w * eps).sin_cos();
    let decay = (-gamma * eps).exp();
    let xe = -spec.g / (w0 * w0);
    let dx = state.x - xe;
    let ratio = gamma / w;
    Ok(Phase1D {
        x: xe + decay * (dx * (cs + ratio * sn) + (sn / w) * state.v),
        v: decay * (state.v * (cs - ratio * sn) - ((w + gamma * ratio) * dx) * sn),
        t: state.t + eps,
    })
}

/// Three-term position recurrence for a constant step:
/// `x_{n+1} = 2 cos(ωε) x_n − x_{n−1} + (4g/ω²) sin²(ωε/2)`.
pub fn recurrence_step(x_n: f64, x_prev: f64, spec: &Osc1DSpec, eps: f64) -> Result<f64> {
    spec.validate()?;
    check_step(eps)?;
    let w = spec.omega;
    let half = (0.5 * w * eps).sin();
    Ok(2.0 * (w * eps).cos() * x_n - x_prev + 4.0 * spec.equilibrium() * half * half)
}

/// Velocity at node `n` recovered from two consecutive positions.
pub fn exact_velocity(x_next: f64, x_n: f64, spec: &Osc1DSpec, eps: f64) -> Result<f64> {
    spec.validate()?;
    check_step(eps)?;
    let w = spec.omega;
    let (sn, cs) = (w * eps).sin_cos();
    if sn.abs() < RESONANCE_TOL {
        return Err(OscError::VelocityNotRecoverable { sin: sn });
    }
    Ok(w * (x_next - x_n * cs) / sn - spec.g / w * (0.5 * w * eps).tan())
}

/// `δ = (2/ω) tan(ωε/2)`, the effective step of the trapezoid form.
pub fn trapezoid_delta(omega: f64, eps: f64) -> Result<f64> {
    let half = 0.5 * omega * eps;
    if half.cos().abs() < RESONANCE_TOL {
        return Err(OscError::ResonantStep(format!(
            "omega*eps = {} is an odd multiple of pi",
            omega * eps
        )));
    }
    Ok(2.0 / omega * half.tan())
}

/// Solves the implicit trapezoid form
///
/// ```text
/// (x' − x)/δ = (v' + v)/2
/// (v' − v)/δ = −ω²(x' + x)/2 + g
/// ```
///
/// which reproduces [`exact_step`] when `δ = (2/ω) tan(ωε/2)`.
pub fn trapezoid_form_step(state: Phase1D, spec: &Osc1DSpec, eps: f64) -> Result<Phase1D> {
    spec.validate()?;
    check_step(eps)?;
    let w2 = spec.omega * spec.omega;
    let delta = trapezoid_delta(spec.omega, eps)?;
    let h = 0.5 * delta;
    // [1, −h; h ω², 1] (x', v') = (x + h v, v − h ω² x + δ g)
    let r1 = state.x + h * state.v;
    let r2 = state.v - h * w2 * state.x + delta * spec.g;
    let det = 1.0 + h * h * w2;
    Ok(Phase1D {
        x: (r1 + h * r2) / det,
        v: (r2 - h * w2 * r1) / det,
        t: state.t + eps,
    })
}

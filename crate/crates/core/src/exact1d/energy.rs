use serde::{Deserialize, Serialize};

use super::{Osc1DSpec, RESONANCE_TOL};
use crate::error::{OscError, Result};

/// The four discrete energy invariants of the driven oscillator, evaluated
/// on a pair of consecutive positions.
///
/// * `e0` is the quadratic first integral of the three-term recurrence,
/// * `e1` uses the forward difference scaled by `(2/ω) sin(ωε/2)`,
/// * `e2` uses the exact velocity formula without the force correction,
/// * `e3` is the continuum energy `½v² + ½ω²x² − g x` at `(x_n, v_n)`.
///
/// With `g = 0`, `e3 == e2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyQuad {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl EnergyQuad {
    pub fn as_array(&self) -> [f64; 4] {
        [self.e0, self.e1, self.e2, self.e3]
    }
}

pub fn energy_invariants(x_n: f64, x_next: f64, spec: &Osc1DSpec, eps: f64) -> Result<EnergyQuad> {
    spec.validate()?;
    let w = spec.omega;
    let g = spec.g;
    let (sn, cs) = (w * eps).sin_cos();
    let (sh, ch) = (0.5 * w * eps).sin_cos();
    if sn.abs() < RESONANCE_TOL || sh.abs() < RESONANCE_TOL {
        return Err(OscError::VelocityNotRecoverable { sin: sn });
    }
    let two_sin_half = 2.0 * sh / w;
    let velocity_like = (x_next - x_n * cs) / (sn / w);
    let tan_half = sh / ch;

    let e0 = x_next * x_next - 2.0 * cs * x_n * x_next + x_n * x_n
        - (x_n + x_next) * two_sin_half * two_sin_half * g;
    let fwd = (x_next - x_n) / two_sin_half;
    let e1 = 0.5 * fwd * fwd + 0.5 * w * w * x_n * x_next - 0.5 * (x_n + x_next) * g;
    let e2 = 0.5 * velocity_like * velocity_like + 0.5 * w * w * x_n * x_n
        - (x_n + x_next) / (2.0 * ch * ch) * g;
    let v_n = velocity_like - g / w * tan_half;
    let e3 = 0.5 * v_n * v_n + 0.5 * w * w * x_n * x_n - g * x_n;
    Ok(EnergyQuad { e0, e1, e2, e3 })
}

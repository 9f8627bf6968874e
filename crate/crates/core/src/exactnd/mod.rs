//! Exact steppers for `ẍ + Ω²x = f(t)` in `n` dimensions.
//!
//! The constant-force steppers work purely with the phase functions of
//! `Ω²`, so `Ω²` may be singular there. Time-dependent forcing goes through
//! the particular solution `Φ(t)` and needs the relevant shifted matrix to
//! be invertible.

mod forcing;

use serde::{Deserialize, Serialize};

pub use forcing::{particular_solution, Forcing, ParticularSolution};

use crate::error::{OscError, Result};
use crate::phasefun::{
    add_vec, delta_from_phase, dot, phase_functions, sub_vec, LuDecomposition, PhaseFunctionSet,
    SquareMatrix,
};

/// Position and velocity vectors at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseND {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default)]
    pub t: f64,
}

impl PhaseND {
    pub fn new(x: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self> {
        let s = Self { x, v, t };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.v.len() {
            return Err(OscError::DimensionMismatch {
                expected: self.x.len(),
                got: self.v.len(),
            });
        }
        if self.x.is_empty() {
            return Err(OscError::Domain(
                "state must have at least one component".into(),
            ));
        }
        if !self.is_finite() {
            return Err(OscError::Domain("state has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Largest componentwise difference in position and velocity.
    pub fn distance(&self, other: &PhaseND) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `Ω²` together with the forcing term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscNDSpec {
    pub a: SquareMatrix,
    #[serde(default)]
    pub forcing: Forcing,
}

impl OscNDSpec {
    pub fn new(a: SquareMatrix, forcing: Forcing) -> Result<Self> {
        let spec = Self { a, forcing };
        spec.validate()?;
        Ok(spec)
    }

    pub fn free(a: SquareMatrix) -> Self {
        Self {
            a,
            forcing: Forcing::None,
        }
    }

    pub fn constant(a: SquareMatrix, force: Vec<f64>) -> Result<Self> {
        Self::new(a, Forcing::Constant { a: force })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Whether `Ω²` is symmetric, which enables the energy diagnostic.
    pub fn symmetric(&self) -> bool {
        self.a.is_symmetric()
    }

    pub fn validate(&self) -> Result<()> {
        self.a.check_finite()?;
        self.forcing.validate(self.dim())
    }

    /// The constant force, or an error for time-dependent forcing.
    pub fn constant_force(&self) -> Result<Vec<f64>> {
        self.forcing.constant_vector(self.dim()).ok_or_else(|| {
            OscError::Domain(
                "this operation needs None or Constant forcing; use the forced recurrence or \
                 nd_forced_step for time-dependent forcing"
                    .into(),
            )
        })
    }

    fn check_vec(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(OscError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(OscError::Domain("vector has non-finite entries".into()));
        }
        Ok(())
    }

    fn check_state(&self, state: &PhaseND) -> Result<()> {
        state.validate()?;
        self.check_vec(&state.x)?;
        self.check_vec(&state.v)
    }
}

fn check_step(eps: f64) -> Result<()> {
    if eps.is_finite() {
        Ok(())
    } else {
        Err(OscError::Domain(format!("step must be finite, got {eps}")))
    }
}

/// Free/constant-force update with precomputed phase functions.
pub(crate) fn apply_exact(
    state: &PhaseND,
    a: &SquareMatrix,
    pf: &PhaseFunctionSet,
    force: &[f64],
) -> PhaseND {
    let cx = pf.c.mul_vec(&state.x);
    let sv = pf.s.mul_vec(&state.v);
    let va = pf.vers.mul_vec(force);
    let sx = pf.s.mul_vec(&state.x);
    let asx = a.mul_vec(&sx);
    let cv = pf.c.mul_vec(&state.v);
    let sa = pf.s.mul_vec(force);
    let x = cx
        .iter()
        .zip(&sv)
        .zip(&va)
        .map(|((p, q), r)| p + q + r)
        .collect();
    let v = asx
        .iter()
        .zip(&cv)
        .zip(&sa)
        .map(|((p, q), r)| -p + q + r)
        .collect();
    PhaseND {
        x,
        v,
        t: state.t + pf.step,
    }
}

/// Exact flow over `eps` for free or constant forcing:
///
/// ```text
/// x' = c x + s v + vers a
/// v' = −Ω² s x + c v + s a
/// ```
pub fn nd_exact_step(state: &PhaseND, spec: &OscNDSpec, eps: f64) -> Result<PhaseND> {
    spec.check_state(state)?;
    check_step(eps)?;
    let force = spec.constant_force()?;
    let pf = phase_functions(&spec.a, eps)?;
    Ok(apply_exact(state, &spec.a, &pf, &force))
}

/// Exact flow for any supported forcing, obtained by stepping the
/// homogeneous deviation `x − Φ(t)` and adding `Φ(t + ε)` back.
pub fn nd_forced_step(state: &PhaseND, spec: &OscNDSpec, eps: f64) -> Result<PhaseND> {
    let ps = ParticularSolution::new(&spec.forcing, &spec.a)?;
    nd_forced_step_with(state, spec, &ps, eps)
}

pub(crate) fn nd_forced_step_with(
    state: &PhaseND,
    spec: &OscNDSpec,
    ps: &ParticularSolution,
    eps: f64,
) -> Result<PhaseND> {
    spec.check_state(state)?;
    check_step(eps)?;
    let pf = phase_functions(&spec.a, eps)?;
    let (phi0, dphi0) = ps.eval(state.t);
    let dev = PhaseND {
        x: sub_vec(&state.x, &phi0),
        v: sub_vec(&state.v, &dphi0),
        t: state.t,
    };
    let zero = vec![0.0; spec.dim()];
    let moved = apply_exact(&dev, &spec.a, &pf, &zero);
    let (phi1, dphi1) = ps.eval(moved.t);
    Ok(PhaseND {
        x: add_vec(&moved.x, &phi1),
        v: add_vec(&moved.v, &dphi1),
        t: moved.t,
    })
}

/// Solves the implicit trapezoid form with the effective step
/// `δ = 2Ω⁻¹ tan(Ωε/2)`:
///
/// ```text
/// δ⁻¹(x' − x) = ½(v' + v)
/// δ⁻¹(v' − v) = −½Ω²(x' + x) + a
/// ```
///
/// as one `2n × 2n` linear system.
pub fn nd_trapezoid_step(state: &PhaseND, spec: &OscNDSpec, eps: f64) -> Result<PhaseND> {
    spec.check_state(state)?;
    check_step(eps)?;
    let force = spec.constant_force()?;
    let n = spec.dim();
    let pf = phase_functions(&spec.a, eps)?;
    let delta = delta_from_phase(&spec.a, &pf)?;
    let half_delta = delta.scale(0.5);
    let half_delta_a = half_delta.matmul(&spec.a);
    // [ I      −δ/2 ] [x']   [x + δ/2 v            ]
    // [ δΩ²/2   I   ] [v'] = [v − δΩ²/2 x + δ a    ]
    let block = SquareMatrix::from_fn(2 * n, |i, j| {
        let diag = if i == j { 1.0 } else { 0.0 };
        match (i < n, j < n) {
            (true, true) | (false, false) => diag,
            (true, false) => -half_delta.get(i, j - n),
            (false, true) => half_delta_a.get(i - n, j),
        }
    });
    let hv = half_delta.mul_vec(&state.v);
    let hax = half_delta_a.mul_vec(&state.x);
    let da = delta.mul_vec(&force);
    let mut rhs = Vec::with_capacity(2 * n);
    rhs.extend(state.x.iter().zip(&hv).map(|(x, h)| x + h));
    rhs.extend(
        state
            .v
            .iter()
            .zip(&hax)
            .zip(&da)
            .map(|((v, h), d)| v - h + d),
    );
    let sol = LuDecomposition::new(&block)?.solve(&rhs);
    Ok(PhaseND {
        x: sol[..n].to_vec(),
        v: sol[n..].to_vec(),
        t: state.t + eps,
    })
}

/// `x_{n+1} = 2c x_n − x_{n−1} + 2 vers a` for a constant step.
pub fn nd_recurrence_step(
    x_n: &[f64],
    x_prev: &[f64],
    spec: &OscNDSpec,
    eps: f64,
) -> Result<Vec<f64>> {
    spec.check_vec(x_n)?;
    spec.check_vec(x_prev)?;
    check_step(eps)?;
    let force = spec.constant_force()?;
    let pf = phase_functions(&spec.a, eps)?;
    Ok(recurrence_with(&pf, x_n, x_prev, &force))
}

pub(crate) fn recurrence_with(
    pf: &PhaseFunctionSet,
    x_n: &[f64],
    x_prev: &[f64],
    force: &[f64],
) -> Vec<f64> {
    let cx = pf.c.mul_vec(x_n);
    let va = pf.vers.mul_vec(force);
    cx.iter()
        .zip(x_prev)
        .zip(&va)
        .map(|((c, p), v)| 2.0 * c - p + 2.0 * v)
        .collect()
}

fn solve_with_s(pf: &PhaseFunctionSet, rhs: &[f64]) -> Result<Vec<f64>> {
    match LuDecomposition::new(&pf.s) {
        Ok(lu) => Ok(lu.solve(rhs)),
        Err(OscError::IllConditioned { condition }) => Err(OscError::ResonantStep(format!(
            "Omega^-1 sin(Omega eps) is singular at eps = {} (condition {condition:.3e})",
            pf.step
        ))),
        Err(e) => Err(e),
    }
}

/// Central-difference velocity `v_n = ½ s⁻¹ (x_{n+1} − x_{n−1})`.
pub fn nd_central_velocity(
    x_next: &[f64],
    x_prev: &[f64],
    a: &SquareMatrix,
    eps: f64,
) -> Result<Vec<f64>> {
    if x_next.len() != a.dim() || x_prev.len() != a.dim() {
        return Err(OscError::DimensionMismatch {
            expected: a.dim(),
            got: if x_next.len() != a.dim() {
                x_next.len()
            } else {
                x_prev.len()
            },
        });
    }
    check_step(eps)?;
    let pf = phase_functions(a, eps)?;
    central_velocity_with(&pf, x_next, x_prev)
}

pub(crate) fn central_velocity_with(
    pf: &PhaseFunctionSet,
    x_next: &[f64],
    x_prev: &[f64],
) -> Result<Vec<f64>> {
    let diff: Vec<f64> = x_next
        .iter()
        .zip(x_prev)
        .map(|(p, q)| 0.5 * (p - q))
        .collect();
    solve_with_s(pf, &diff)
}

/// Exact recurrence for time-dependent forcing:
///
/// ```text
/// x_{n+1} = 2c x_n − x_{n−1} + Φ_{n+1} − 2c Φ_n + Φ_{n−1}
/// v_n     = ½ s⁻¹ (x_{n+1} − x_{n−1} − Φ_{n+1} + Φ_{n−1}) + Φ̇_n
/// ```
///
/// with `Φ_k = Φ(t_n + (k − n)ε)`.
pub fn nd_forced_recurrence(
    x_n: &[f64],
    x_prev: &[f64],
    spec: &OscNDSpec,
    eps: f64,
    t_n: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.check_vec(x_n)?;
    spec.check_vec(x_prev)?;
    check_step(eps)?;
    let ps = ParticularSolution::new(&spec.forcing, &spec.a)?;
    let pf = phase_functions(&spec.a, eps)?;
    forced_recurrence_with(&pf, &ps, x_n, x_prev, t_n)
}

pub(crate) fn forced_recurrence_with(
    pf: &PhaseFunctionSet,
    ps: &ParticularSolution,
    x_n: &[f64],
    x_prev: &[f64],
    t_n: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let eps = pf.step;
    let phi_next = ps.derivative(t_n + eps, 0);
    let phi_n = ps.derivative(t_n, 0);
    let phi_prev = ps.derivative(t_n - eps, 0);
    // deviation from Φ obeys the free recurrence
    let dev_n = sub_vec(x_n, &phi_n);
    let dev_prev = sub_vec(x_prev, &phi_prev);
    let cdev = pf.c.mul_vec(&dev_n);
    let dev_next: Vec<f64> = cdev
        .iter()
        .zip(&dev_prev)
        .map(|(c, p)| 2.0 * c - p)
        .collect();
    let x_next = add_vec(&dev_next, &phi_next);
    let half_diff: Vec<f64> = dev_next
        .iter()
        .zip(&dev_prev)
        .map(|(p, q)| 0.5 * (p - q))
        .collect();
    let v = add_vec(&solve_with_s(pf, &half_diff)?, &ps.derivative(t_n, 1));
    Ok((x_next, v))
}

/// `Iₙ = ½|v|² + ½⟨x, Ω²x⟩ − ⟨a, x⟩`, conserved by the exact flow for
/// symmetric `Ω²` and constant force.
pub fn nd_energy(state: &PhaseND, spec: &OscNDSpec) -> Result<f64> {
    spec.check_state(state)?;
    if !spec.symmetric() {
        return Err(OscError::Domain(format!(
            "energy invariant needs a symmetric Omega^2 (asymmetry {:.3e})",
            spec.a.max_asymmetry()
        )));
    }
    let force = spec.constant_force()?;
    let ax = spec.a.mul_vec(&state.x);
    Ok(0.5 * dot(&state.v, &state.v) + 0.5 * dot(&state.x, &ax) - dot(&force, &state.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn spd3() -> SquareMatrix {
        SquareMatrix::from_rows(&[
            vec![2.0, 0.3, -0.1],
            vec![0.3, 1.5, 0.2],
            vec![-0.1, 0.2, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn decoupled_quarter_turn() {
        let spec = OscNDSpec::free(SquareMatrix::diag(&[1.0, 4.0]));
        let s = PhaseND::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.0).unwrap();
        let out = nd_exact_step(&s, &spec, FRAC_PI_2).unwrap();
        assert!(out.x[0].abs() < 1e-15 && out.x[1].abs() < 1e-15);
        assert!((out.v[0] + 1.0).abs() < 1e-15 && out.v[1].abs() < 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let a = spd3();
        let force = vec![0.5, -1.0, 2.0];
        let spec = OscNDSpec::constant(a.clone(), force.clone()).unwrap();
        let xe = a.lu().unwrap().solve(&force);
        let s = PhaseND::new(xe.clone(), vec![0.0; 3], 0.0).unwrap();
        let out = nd_exact_step(&s, &spec, 0.7).unwrap();
        assert!(out.distance(&s) < 1e-14);
        let tr = nd_trapezoid_step(&s, &spec, 0.7).unwrap();
        assert!(tr.distance(&s) < 1e-14);
        let rec = nd_recurrence_step(&xe, &xe, &spec, 0.7).unwrap();
        assert!(crate::phasefun::max_abs_diff(&rec, &xe) < 1e-14);
        let v = nd_central_velocity(&xe, &xe, &a, 0.7).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn singular_matrix_with_constant_force() {
        // free particle under constant force: x' = x + εv + ε²/2 a
        let spec = OscNDSpec::constant(SquareMatrix::zeros(1), vec![2.0]).unwrap();
        let s = PhaseND::new(vec![1.0], vec![3.0], 0.0).unwrap();
        let out = nd_exact_step(&s, &spec, 0.5).unwrap();
        assert!((out.x[0] - (1.0 + 1.5 + 0.25)).abs() < 1e-15);
        assert!((out.v[0] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_trapezoid_matches_exact1d() {
        use crate::exact1d::{trapezoid_form_step, Osc1DSpec, Phase1D};
        let spec1 = Osc1DSpec::driven(1.3, 0.4);
        let specn = OscNDSpec::constant(SquareMatrix::scalar(1.69), vec![0.4]).unwrap();
        let s1 = trapezoid_form_step(Phase1D::new(0.2, -0.5, 0.0), &spec1, 0.6).unwrap();
        let sn = nd_trapezoid_step(
            &PhaseND::new(vec![0.2], vec![-0.5], 0.0).unwrap(),
            &specn,
            0.6,
        )
        .unwrap();
        assert!((s1.x - sn.x[0]).abs() < 1e-14);
        assert!((s1.v - sn.v[0]).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_equals_exact() {
        let spec = OscNDSpec::constant(spd3(), vec![0.1, 0.2, -0.3]).unwrap();
        let s = PhaseND::new(vec![0.4, -0.2, 1.0], vec![0.3, 0.0, -0.7], 0.0).unwrap();
        for &eps in &[0.05, 0.4, 1.1] {
            let e = nd_exact_step(&s, &spec, eps).unwrap();
            let t = nd_trapezoid_step(&s, &spec, eps).unwrap();
            assert!(e.distance(&t) < 1e-12, "eps {eps}: {}", e.distance(&t));
        }
    }

    #[test]
    fn recurrence_from_cos_samples() {
        let spec = OscNDSpec::free(SquareMatrix::scalar(1.0));
        let x2 = nd_recurrence_step(&[0.0], &[1.0], &spec, FRAC_PI_2).unwrap();
        assert!((x2[0] + 1.0).abs() < 1e-15);
        let v = nd_central_velocity(&[-1.0], &[1.0], &spec.a, FRAC_PI_2).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn recurrence_matches_iterated_step() {
        let spec = OscNDSpec::constant(spd3(), vec![0.3, 0.0, -0.2]).unwrap();
        let eps = 0.3;
        let mut s = PhaseND::new(vec![1.0, 0.5, -0.5], vec![0.0, 0.2, 0.1], 0.0).unwrap();
        let mut xs = vec![s.x.clone()];
        let mut vs = vec![s.v.clone()];
        for _ in 0..20 {
            s = nd_exact_step(&s, &spec, eps).unwrap();
            xs.push(s.x.clone());
            vs.push(s.v.clone());
        }
        for k in 1..20 {
            let next = nd_recurrence_step(&xs[k], &xs[k - 1], &spec, eps).unwrap();
            assert!(crate::phasefun::max_abs_diff(&next, &xs[k + 1]) < 1e-12);
            let (fx, fv) =
                nd_forced_recurrence(&xs[k], &xs[k - 1], &spec, eps, k as f64 * eps).unwrap();
            assert!(crate::phasefun::max_abs_diff(&fx, &xs[k + 1]) < 1e-12);
            assert!(crate::phasefun::max_abs_diff(&fv, &vs[k]) < 1e-12);
        }
    }

    #[test]
    fn forced_step_polynomial() {
        let a = SquareMatrix::diag(&[2.0, 3.0]);
        let forcing = Forcing::Polynomial {
            coeffs: vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        };
        let spec = OscNDSpec::new(a, forcing).unwrap();
        let s0 = PhaseND::new(vec![0.1, 0.2], vec![0.0, -0.1], 0.0).unwrap();
        let direct = nd_forced_step(&s0, &spec, 1.0).unwrap();
        let mut s = s0.clone();
        for _ in 0..4 {
            s = nd_forced_step(&s, &spec, 0.25).unwrap();
        }
        assert!(s.distance(&direct) < 1e-13);
        // first coordinate: ẍ + 2x = 1 + t, particular (1 + t)/2
        let w = 2f64.sqrt();
        let x = 0.5 * (1.0 + 1.0) + (0.1 - 0.5) * w.cos() + (0.0 - 0.5) / w * w.sin();
        assert!((direct.x[0] - x).abs() < 1e-14);
    }

    #[test]
    fn energy_examples() {
        let spec = OscNDSpec::free(SquareMatrix::identity(2));
        let s = PhaseND::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(nd_energy(&s, &spec).unwrap(), 0.5);

        let a = spd3();
        let force = vec![1.0, 0.0, -1.0];
        let spec = OscNDSpec::constant(a.clone(), force.clone()).unwrap();
        let xe = a.lu().unwrap().solve(&force);
        let s = PhaseND::new(xe.clone(), vec![0.0; 3], 0.0).unwrap();
        let e = nd_energy(&s, &spec).unwrap();
        assert!((e + 0.5 * dot(&force, &xe)).abs() < 1e-14);

        let asym =
            OscNDSpec::free(SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap());
        let s2 = PhaseND::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.0).unwrap();
        assert!(nd_energy(&s2, &asym).is_err());
    }

    #[test]
    fn exact_step_rejects_time_dependent_forcing() {
        let spec = OscNDSpec::new(
            SquareMatrix::identity(1),
            Forcing::Exponential {
                f0: vec![1.0],
                alpha: 0.5,
            },
        )
        .unwrap();
        let s = PhaseND::new(vec![0.0], vec![0.0], 0.0).unwrap();
        assert!(matches!(
            nd_exact_step(&s, &spec, 0.1),
            Err(OscError::Domain(_))
        ));
        assert!(nd_forced_step(&s, &spec, 0.1).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let spec = OscNDSpec::free(SquareMatrix::identity(2));
        let s = PhaseND::new(vec![1.0], vec![0.0], 0.0).unwrap();
        assert!(matches!(
            nd_exact_step(&s, &spec, 0.1),
            Err(OscError::DimensionMismatch { .. })
        ));
    }
}

//! Comparison schemes: Gautschi's two-step method, the Euler–Lawson pair,
//! exponential Euler and the symmetric Euler baseline.

mod expo;

use std::fmt;

pub use expo::{expm, expm_phi1, phi1};

use crate::error::{OscError, Result};
use crate::phasefun::{LuDecomposition, SquareMatrix};

type VecFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Box<dyn Fn(&[f64]) -> SquareMatrix + Send + Sync>;

/// A nonlinear term `g(x)` with an optional Jacobian.
pub struct NonlinearForce {
    g: VecFn,
    jacobian: Option<JacFn>,
}

impl fmt::Debug for NonlinearForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearForce")
            .field("jacobian", &self.jacobian.is_some())
            .finish_non_exhaustive()
    }
}

impl NonlinearForce {
    pub fn new(g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            g: Box::new(g),
            jacobian: None,
        }
    }

    pub fn with_jacobian(
        g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> SquareMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            g: Box::new(g),
            jacobian: Some(Box::new(jacobian)),
        }
    }

    pub fn constant(value: Vec<f64>) -> Self {
        let n = value.len();
        Self::with_jacobian(move |_| value.clone(), move |_| SquareMatrix::zeros(n))
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(vec![0.0; n])
    }

    /// `g(x) = −κ x³` componentwise.
    pub fn cubic(kappa: f64) -> Self {
        Self::with_jacobian(
            move |x| x.iter().map(|&xi| -kappa * xi * xi * xi).collect(),
            move |x| {
                let d: Vec<f64> = x.iter().map(|&xi| -3.0 * kappa * xi * xi).collect();
                SquareMatrix::diag(&d)
            },
        )
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = (self.g)(x);
        if out.len() != x.len() {
            return Err(OscError::DimensionMismatch {
                expected: x.len(),
                got: out.len(),
            });
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(OscError::Domain(
                "nonlinear force returned non-finite values".into(),
            ));
        }
        Ok(out)
    }

    pub fn jacobian(&self, x: &[f64]) -> Option<SquareMatrix> {
        self.jacobian.as_ref().map(|j| j(x))
    }
}

/// The constant matrix `L` of `ẏ = Ly + g(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPart {
    pub l: SquareMatrix,
}

impl LinearPart {
    pub fn new(l: SquareMatrix) -> Result<Self> {
        l.check_finite()?;
        Ok(Self { l })
    }

    /// `[[0, 1], [−ω², 0]]` acting on `(x, v)`.
    pub fn oscillator(omega: f64) -> Self {
        Self {
            l: SquareMatrix::from_fn(2, |i, j| match (i, j) {
                (0, 1) => 1.0,
                (1, 0) => -omega * omega,
                _ => 0.0,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    /// `(e^{εL}, φ₁(εL))`
    pub fn propagators(&self, eps: f64) -> Result<(SquareMatrix, SquareMatrix)> {
        check_step(eps)?;
        expm_phi1(&self.l.scale(eps))
    }
}

fn check_step(eps: f64) -> Result<()> {
    if eps.is_finite() {
        Ok(())
    } else {
        Err(OscError::Domain(format!("step must be finite, got {eps}")))
    }
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(OscError::DimensionMismatch {
            expected: n,
            got: v.len(),
        })
    }
}

/// `x_{n+1} = 2 cos(ωε) x_n − x_{n−1} + ((2/ω) sin(ωε/2))² g(x_n)`.
pub fn gautschi_step(
    x_n: &[f64],
    x_prev: &[f64],
    omega: f64,
    eps: f64,
    g: &NonlinearForce,
) -> Result<Vec<f64>> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(OscError::Domain(format!(
            "omega must be positive, got {omega}"
        )));
    }
    check_step(eps)?;
    check_len(x_prev, x_n.len())?;
    let gx = g.eval(x_n)?;
    let c2 = 2.0 * (omega * eps).cos();
    let w = 2.0 / omega * (0.5 * omega * eps).sin();
    let w2 = w * w;
    Ok(x_n
        .iter()
        .zip(x_prev)
        .zip(&gx)
        .map(|((x, p), f)| c2 * x - p + w2 * f)
        .collect())
}

/// Explicit Euler–Lawson: `y' = e^{εL}(y + ε g(y))`.
pub fn lawson_explicit_step(
    y: &[f64],
    l: &LinearPart,
    eps: f64,
    g: &NonlinearForce,
) -> Result<Vec<f64>> {
    check_len(y, l.dim())?;
    let (e, _) = l.propagators(eps)?;
    lawson_explicit_with(&e, y, eps, g)
}

pub(crate) fn lawson_explicit_with(
    e: &SquareMatrix,
    y: &[f64],
    eps: f64,
    g: &NonlinearForce,
) -> Result<Vec<f64>> {
    let gy = g.eval(y)?;
    let inner: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a + eps * b).collect();
    Ok(e.mul_vec(&inner))
}

/// Iteration cap of the implicit Lawson solve.
pub const IMPLICIT_MAX_ITER: usize = 50;
/// Residual target of the implicit Lawson solve, relative to `max(1, ‖y‖∞)`.
pub const IMPLICIT_TOL: f64 = 1e-13;

/// Implicit Euler–Lawson: solves `y' = e^{εL} y + ε g(y')`.
///
/// Damped fixed-point iteration from the predictor `e^{εL}y + ε g(y)`,
/// switching to Newton steps when a Jacobian is available.
pub fn lawson_implicit_step(
    y: &[f64],
    l: &LinearPart,
    eps: f64,
    g: &NonlinearForce,
) -> Result<Vec<f64>> {
    check_len(y, l.dim())?;
    let (e, _) = l.propagators(eps)?;
    lawson_implicit_with(&e, y, eps, g)
}

pub(crate) fn lawson_implicit_with(
    e: &SquareMatrix,
    y: &[f64],
    eps: f64,
    g: &NonlinearForce,
) -> Result<Vec<f64>> {
    let n = y.len();
    let base = e.mul_vec(y);
    let residual = |z: &[f64], gz: &[f64]| -> Vec<f64> {
        (0..n).map(|i| z[i] - base[i] - eps * gz[i]).collect()
    };
    let norm = |r: &[f64]| r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let g0 = g.eval(y)?;
    let mut z: Vec<f64> = (0..n).map(|i| base[i] + eps * g0[i]).collect();
    let mut r = residual(&z, &g.eval(&z)?);
    let mut rnorm = norm(&r);
    let mut damping = 1.0;
    for _ in 0..IMPLICIT_MAX_ITER {
        let scale = norm(&z).max(1.0);
        if rnorm <= IMPLICIT_TOL * scale {
            return Ok(z);
        }
        let step: Vec<f64> = match g.jacobian(&z) {
            Some(jac) => {
                // (I − ε J) Δ = −r
                let m = &SquareMatrix::identity(n) - &jac.scale(eps);
                let neg: Vec<f64> = r.iter().map(|x| -x).collect();
                LuDecomposition::factor(&m)?.solve(&neg)
            }
            None => r.iter().map(|x| -x).collect(),
        };
        let mut accepted = false;
        while damping > 1e-4 {
            let trial: Vec<f64> = (0..n).map(|i| z[i] + damping * step[i]).collect();
            let gt = g.eval(&trial)?;
            let rt = residual(&trial, &gt);
            let rtn = norm(&rt);
            if rtn < rnorm || rtn <= IMPLICIT_TOL * norm(&trial).max(1.0) {
                z = trial;
                r = rt;
                rnorm = rtn;
                damping = (damping * 2.0).min(1.0);
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rnorm <= IMPLICIT_TOL * norm(&z).max(1.0) {
        return Ok(z);
    }
    Err(OscError::NonConvergence {
        solver: "implicit Euler-Lawson",
        iterations: IMPLICIT_MAX_ITER,
        residual: rnorm,
    })
}

/// Exponential Euler: `y' = e^{εL} y + ε φ₁(εL) g(y)`.
pub fn exponential_euler_step(
    y: &[f64],
    l: &LinearPart,
    eps: f64,
    g: &NonlinearForce,
) -> Result<Vec<f64>> {
    check_len(y, l.dim())?;
    let (e, p) = l.propagators(eps)?;
    exponential_euler_with(&e, &p, y, eps, g)
}

pub(crate) fn exponential_euler_with(
    e: &SquareMatrix,
    p: &SquareMatrix,
    y: &[f64],
    eps: f64,
    g: &NonlinearForce,
) -> Result<Vec<f64>> {
    let gy = g.eval(y)?;
    let ey = e.mul_vec(y);
    let pg = p.mul_vec(&gy);
    Ok(ey.iter().zip(&pg).map(|(a, b)| a + eps * b).collect())
}

/// Symmetric Euler baseline `x_{n+1} = 2x_n − x_{n−1} − ε²ω²x_n + ε²g`.
pub fn symmetric_euler_step(x_n: f64, x_prev: f64, omega: f64, eps: f64, g_const: f64) -> f64 {
    let e2 = eps * eps;
    2.0 * x_n - x_prev - e2 * omega * omega * x_n + e2 * g_const
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact1d::{exact_step, recurrence_step, Osc1DSpec, Phase1D};

    #[test]
    fn gautschi_constant_force_is_exact_recurrence() {
        let spec = Osc1DSpec::driven(2.0, 0.7);
        let eps = 0.3;
        let g = NonlinearForce::constant(vec![0.7]);
        let x = gautschi_step(&[0.4], &[0.1], 2.0, eps, &g).unwrap();
        let r = recurrence_step(0.4, 0.1, &spec, eps).unwrap();
        assert!((x[0] - r).abs() < 1e-15);
    }

    #[test]
    fn free_exponential_integrators_rotate() {
        let w = 1.5;
        let eps = 0.4;
        let l = LinearPart::oscillator(w);
        let g = NonlinearForce::zero(2);
        let y = [0.8, -0.3];
        let ex = exact_step(Phase1D::new(0.8, -0.3, 0.0), &Osc1DSpec::free(w), eps).unwrap();
        for out in [
            lawson_explicit_step(&y, &l, eps, &g).unwrap(),
            lawson_implicit_step(&y, &l, eps, &g).unwrap(),
            exponential_euler_step(&y, &l, eps, &g).unwrap(),
        ] {
            assert!((out[0] - ex.x).abs() < 1e-14 && (out[1] - ex.v).abs() < 1e-14);
        }
    }

    #[test]
    fn explicit_lawson_constant_force_formula() {
        let (w, eps, gc) = (1.3, 0.5, 0.6);
        let l = LinearPart::oscillator(w);
        let y = [0.2, 0.9];
        let out =
            lawson_explicit_step(&y, &l, eps, &NonlinearForce::constant(vec![0.0, gc])).unwrap();
        let (s, c) = (w * eps).sin_cos();
        let x = c * y[0] + s / w * y[1] + eps * gc / w * s;
        let v = -w * s * y[0] + c * y[1] + eps * gc * c;
        assert!((out[0] - x).abs() < 1e-14 && (out[1] - v).abs() < 1e-14);
    }

    #[test]
    fn implicit_lawson_constant_force_one_shot() {
        let l = LinearPart::oscillator(1.0);
        let y = [1.0, 0.0];
        let out =
            lawson_implicit_step(&y, &l, 0.3, &NonlinearForce::constant(vec![0.0, 2.0])).unwrap();
        let (e, _) = l.propagators(0.3).unwrap();
        let ey = e.mul_vec(&y);
        assert!((out[0] - ey[0]).abs() < 1e-15);
        assert!((out[1] - ey[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn implicit_lawson_nonlinear_residual() {
        let l = LinearPart::oscillator(2.0);
        let y = [0.5, 0.1];
        let eps = 0.05;
        let g = NonlinearForce::new(|y| vec![0.0, -y[0].powi(3)]);
        let out = lawson_implicit_step(&y, &l, eps, &g).unwrap();
        let (e, _) = l.propagators(eps).unwrap();
        let ey = e.mul_vec(&y);
        let gy = g.eval(&out).unwrap();
        for i in 0..2 {
            assert!((out[i] - ey[i] - eps * gy[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn exponential_euler_constant_force_is_exact() {
        let (w, eps, gc) = (1.3, 0.5, 0.6);
        let out = exponential_euler_step(
            &[0.2, 0.9],
            &LinearPart::oscillator(w),
            eps,
            &NonlinearForce::constant(vec![0.0, gc]),
        )
        .unwrap();
        let ex = exact_step(Phase1D::new(0.2, 0.9, 0.0), &Osc1DSpec::driven(w, gc), eps).unwrap();
        assert!((out[0] - ex.x).abs() < 1e-14 && (out[1] - ex.v).abs() < 1e-14);
    }

    #[test]
    fn exponential_euler_diagonal_decay() {
        let l = LinearPart::new(SquareMatrix::diag(&[-1.0, -2.0])).unwrap();
        let g = NonlinearForce::constant(vec![1.0, 3.0]);
        let eps = 0.7;
        let out = exponential_euler_step(&[2.0, -1.0], &l, eps, &g).unwrap();
        // y' = e^{λε} y + (e^{λε} − 1)/λ · g
        for (i, (&lam, (&y0, &gi))) in [-1.0f64, -2.0]
            .iter()
            .zip([2.0, -1.0].iter().zip(&[1.0, 3.0]))
            .enumerate()
        {
            let want = (lam * eps).exp() * y0 + (lam * eps).exp_m1() / lam * gi;
            assert!((out[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_euler_basics() {
        assert_eq!(symmetric_euler_step(3.0, 1.0, 0.0, 0.5, 0.0), 5.0);
        let eps: f64 = 1e-2;
        let x = symmetric_euler_step(eps.cos(), 1.0, 1.0, eps, 0.0);
        assert!((x - (2.0 * eps).cos()).abs() < 1e-7);
    }
}

use super::matrix::{LuDecomposition, SquareMatrix};
use crate::error::{OscError, Result};

/// Maximum number of series terms after argument reduction.
pub const MAX_SERIES_TERMS: usize = 64;

/// Relative size of the last retained series term.
pub const SERIES_TOL: f64 = 1e-18;

/// `cos(Ω ε)`, `Ω⁻¹ sin(Ω ε)` and `Ω⁻²(1 − cos(Ω ε))` for one step `ε`,
/// all computed from `Ω²` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFunctionSet {
    pub c: SquareMatrix,
    pub s: SquareMatrix,
    pub vers: SquareMatrix,
    pub step: f64,
}

impl PhaseFunctionSet {
    pub fn dim(&self) -> usize {
        self.c.dim()
    }
}

/// Evaluates the even phase functions of `a = Ω²` at step `eps`.
///
/// The step is halved until `‖ε² A‖₁ ≤ 1`, the three Taylor series in
/// `−ε²A` are summed there and the result is doubled back with
///
/// ```text
/// c(2h)    = 2 c(h)² − I
/// s(2h)    = 2 s(h) c(h)
/// vers(2h) = 2 vers(h) (I + c(h))
/// ```
///
/// No square root of `a` is ever formed, so negative eigenvalues give the
/// hyperbolic continuation and zero eigenvalues the `ε`, `ε²/2` limits.
pub fn phase_functions(a: &SquareMatrix, eps: f64) -> Result<PhaseFunctionSet> {
    a.check_finite()?;
    if !eps.is_finite() {
        return Err(OscError::Domain(format!("step must be finite, got {eps}")));
    }
    let n = a.dim();
    let scaled = a.scale(eps * eps);
    let mut doublings = 0u32;
    let mut reduction = 1.0;
    let norm = scaled.norm1();
    while norm * reduction > 1.0 {
        doublings += 1;
        reduction *= 0.25;
    }
    // multiplication by a power of four is exact
    let z = scaled.scale(-reduction);

    // c = Σ zᵏ/(2k)!, sinc = Σ zᵏ/(2k+1)!, versc = Σ zᵏ/(2k+2)!
    let id = SquareMatrix::identity(n);
    let mut c = id.clone();
    let mut sinc = id.clone();
    let mut versc = id.scale(0.5);
    let mut power = id;
    let mut fact = 1.0_f64; // (2k)!
    let mut converged = false;
    for k in 1..=MAX_SERIES_TERMS {
        power = power.matmul(&z);
        let two_k = (2 * k) as f64;
        fact *= (two_k - 1.0) * two_k;
        let pnorm = power.max_abs();
        if pnorm / fact <= SERIES_TOL * c.max_abs() {
            converged = true;
            break;
        }
        let inv_c = 1.0 / fact;
        let inv_s = inv_c / (two_k + 1.0);
        let inv_v = inv_s / (two_k + 2.0);
        for i in 0..n {
            for j in 0..n {
                let p = power.get(i, j);
                c.set(i, j, c.get(i, j) + p * inv_c);
                sinc.set(i, j, sinc.get(i, j) + p * inv_s);
                versc.set(i, j, versc.get(i, j) + p * inv_v);
            }
        }
    }
    if !converged {
        return Err(OscError::Internal(format!(
            "phase-function series did not reach {SERIES_TOL:e} within {MAX_SERIES_TERMS} terms \
             (reduced norm {:.3e})",
            z.norm1()
        )));
    }

    // sinc = s/h and versc = vers/h² are scale free:
    // sinc(2h) = sinc(h) c(h), versc(2h) = versc(h) (I + c(h)) / 2
    for _ in 0..doublings {
        let one_plus_c = c.shift(1.0);
        sinc = sinc.matmul(&c);
        versc = versc.matmul(&one_plus_c).scale(0.5);
        c = c.matmul(&c).scale(2.0).shift(-1.0);
    }

    let mut out = PhaseFunctionSet {
        c,
        s: sinc.scale(eps),
        vers: versc.scale(eps * eps),
        step: eps,
    };
    if a.is_symmetric() {
        out.c.symmetrize();
        out.s.symmetrize();
        out.vers.symmetrize();
    }
    Ok(out)
}

/// `δ = 2 Ω⁻¹ tan(Ω ε / 2) = 2 s (I + c)⁻¹`.
///
/// Fails with [`OscError::ResonantStep`] when some eigenvalue puts `Ω ε` at an
/// odd multiple of π.
pub fn effective_delta(a: &SquareMatrix, eps: f64) -> Result<SquareMatrix> {
    let pf = phase_functions(a, eps)?;
    delta_from_phase(a, &pf)
}

pub(crate) fn delta_from_phase(a: &SquareMatrix, pf: &PhaseFunctionSet) -> Result<SquareMatrix> {
    let one_plus_c = pf.c.shift(1.0);
    let lu = match LuDecomposition::new(&one_plus_c) {
        Ok(lu) => lu,
        Err(OscError::IllConditioned { condition }) => {
            return Err(OscError::ResonantStep(resonance_message(
                a,
                &one_plus_c,
                pf.step,
                condition,
            )))
        }
        Err(e) => return Err(e),
    };
    // s and c commute, so (I + c)⁻¹ s = s (I + c)⁻¹
    let mut delta = lu.solve_matrix(&pf.s).scale(2.0);
    if a.is_symmetric() {
        delta.symmetrize();
    }
    Ok(delta)
}

/// Diagnoses a near-singular `I + c` by inverse iteration, reporting the
/// eigenvalue of `Ω²` responsible for the resonance.
fn resonance_message(a: &SquareMatrix, b: &SquareMatrix, eps: f64, condition: f64) -> String {
    let n = a.dim();
    let shifted = b.shift(1e-10 * b.max_abs().max(1.0));
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    if let Ok(lu) = LuDecomposition::factor(&shifted) {
        for _ in 0..8 {
            let w = lu.solve(&u);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            u = w.into_iter().map(|x| x / norm).collect();
        }
    }
    let au = a.mul_vec(&u);
    let lambda =
        u.iter().zip(&au).map(|(x, y)| x * y).sum::<f64>() / u.iter().map(|x| x * x).sum::<f64>();
    format!(
        "I + cos(Omega eps) is singular (condition {condition:.3e}); eigenvalue of Omega^2 near \
         {lambda:.6e} gives omega*eps = {:.6} at eps = {eps}",
        lambda.max(0.0).sqrt() * eps.abs()
    )
}

/// Scalar phase functions for `ω² = omega2` using closed forms.
pub fn scalar_phase(omega2: f64, eps: f64) -> (f64, f64, f64) {
    if omega2 > 0.0 {
        let w = omega2.sqrt();
        let half = (0.5 * w * eps).sin();
        (
            (w * eps).cos(),
            (w * eps).sin() / w,
            2.0 * half * half / omega2,
        )
    } else if omega2 < 0.0 {
        let mu = (-omega2).sqrt();
        let half = (0.5 * mu * eps).sinh();
        (
            (mu * eps).cosh(),
            (mu * eps).sinh() / mu,
            -2.0 * half * half / omega2,
        )
    } else {
        (1.0, eps, 0.5 * eps * eps)
    }
}

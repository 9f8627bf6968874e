use crate::error::{OscError, Result};
use crate::phasefun::{SquareMatrix, MAX_SERIES_TERMS, SERIES_TOL};

/// `e^M` and `φ₁(M) = Σ Mᵏ/(k+1)!` by scaling and squaring.
///
/// `M` is halved until `‖M‖₁ ≤ ½`, both series are summed there and the
/// result is doubled back with `φ₁(2Z) = ½ φ₁(Z)(e^Z + I)` and
/// `e^{2Z} = (e^Z)²`.
pub fn expm_phi1(m: &SquareMatrix) -> Result<(SquareMatrix, SquareMatrix)> {
    m.check_finite()?;
    let n = m.dim();
    let mut doublings = 0u32;
    let mut reduction = 1.0;
    let norm = m.norm1();
    while norm * reduction > 0.5 {
        doublings += 1;
        reduction *= 0.5;
    }
    let z = m.scale(reduction);

    let id = SquareMatrix::identity(n);
    let mut e = id.clone();
    let mut phi = id.clone();
    let mut power = id;
    let mut fact = 1.0_f64; // k!
    let mut converged = false;
    for k in 1..=MAX_SERIES_TERMS {
        power = power.matmul(&z);
        fact *= k as f64;
        if power.max_abs() / fact <= SERIES_TOL {
            converged = true;
            break;
        }
        e = &e + &power.scale(1.0 / fact);
        phi = &phi + &power.scale(1.0 / (fact * (k as f64 + 1.0)));
    }
    if !converged {
        return Err(OscError::Internal(format!(
            "exponential series did not converge within {MAX_SERIES_TERMS} terms"
        )));
    }
    for _ in 0..doublings {
        phi = phi.matmul(&e.shift(1.0)).scale(0.5);
        e = e.matmul(&e);
    }
    Ok((e, phi))
}

/// `e^M`.
pub fn expm(m: &SquareMatrix) -> Result<SquareMatrix> {
    Ok(expm_phi1(m)?.0)
}

/// `φ₁(M) = (e^M − I) M⁻¹`, defined for singular `M` as well.
pub fn phi1(m: &SquareMatrix) -> Result<SquareMatrix> {
    Ok(expm_phi1(m)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_values() {
        for &z in &[-3.0, -0.1, 0.0, 0.2, 1.0, 5.0] {
            let (e, p) = expm_phi1(&SquareMatrix::scalar(z)).unwrap();
            let want_e = f64::exp(z);
            let want_p = if z == 0.0 { 1.0 } else { f64::exp_m1(z) / z };
            assert!(
                (e.get(0, 0) - want_e).abs() < 1e-14 * want_e.max(1.0),
                "{z}"
            );
            assert!(
                (p.get(0, 0) - want_p).abs() < 1e-14 * want_p.max(1.0),
                "{z}"
            );
        }
    }

    #[test]
    fn rotation_generator() {
        let w = 2.0;
        let eps = 0.9;
        let l = SquareMatrix::from_rows(&[vec![0.0, eps], vec![-w * w * eps, 0.0]]).unwrap();
        let e = expm(&l).unwrap();
        assert!((e.get(0, 0) - (w * eps).cos()).abs() < 1e-14);
        assert!((e.get(0, 1) - (w * eps).sin() / w).abs() < 1e-14);
        assert!((e.get(1, 0) + w * (w * eps).sin()).abs() < 1e-14);
    }

    #[test]
    fn phi_identity() {
        let m = SquareMatrix::from_rows(&[
            vec![0.3, 1.2, -0.4],
            vec![-2.0, 0.1, 0.5],
            vec![0.0, 0.7, -1.5],
        ])
        .unwrap();
        let (e, p) = expm_phi1(&m).unwrap();
        let lhs = m.matmul(&p);
        let rhs = e.shift(-1.0);
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{OscError, Result};
use crate::phasefun::{LuDecomposition, SquareMatrix};

/// Driving force `f(t)` of `ẍ + Ω²x = f(t)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Forcing {
    #[default]
    None,
    Constant {
        a: Vec<f64>,
    },
    /// `Σ c_k t^k`, coefficients listed from `c_0` upwards.
    Polynomial {
        coeffs: Vec<Vec<f64>>,
    },
    /// `e^{αt} f₀`
    Exponential {
        f0: Vec<f64>,
        alpha: f64,
    },
    /// `f₀ sin(ω_f t)`
    Sinusoidal {
        f0: Vec<f64>,
        omega_f: f64,
    },
    Sum {
        terms: Vec<Forcing>,
    },
}

impl Forcing {
    /// Checks vector lengths against `n` and the polynomial leading term.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check = |v: &[f64]| -> Result<()> {
            if v.len() != n {
                return Err(OscError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(OscError::Domain(
                    "forcing vector has non-finite entries".into(),
                ));
            }
            Ok(())
        };
        match self {
            Forcing::None => Ok(()),
            Forcing::Constant { a } => check(a),
            Forcing::Polynomial { coeffs } => {
                let last = coeffs.last().ok_or_else(|| {
                    OscError::Domain("polynomial forcing needs coefficients".into())
                })?;
                coeffs.iter().try_for_each(|c| check(c))?;
                if last.iter().all(|&x| x == 0.0) {
                    return Err(OscError::Domain(
                        "leading polynomial coefficient c_N must be nonzero".into(),
                    ));
                }
                Ok(())
            }
            Forcing::Exponential { f0, alpha } => {
                check(f0)?;
                finite_scalar(*alpha, "alpha")
            }
            Forcing::Sinusoidal { f0, omega_f } => {
                check(f0)?;
                finite_scalar(*omega_f, "omega_f")
            }
            Forcing::Sum { terms } => terms.iter().try_for_each(|t| t.validate(n)),
        }
    }

    /// `None` or `Constant`: the forcing has no time dependence.
    pub fn is_constant(&self) -> bool {
        match self {
            Forcing::None | Forcing::Constant { .. } => true,
            Forcing::Sum { terms } => terms.iter().all(Forcing::is_constant),
            _ => false,
        }
    }

    /// The constant force vector, if the forcing is time independent.
    pub fn constant_vector(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Forcing::None => Some(vec![0.0; n]),
            Forcing::Constant { a } => Some(a.clone()),
            Forcing::Sum { terms } => {
                let mut acc = vec![0.0; n];
                for t in terms {
                    let v = t.constant_vector(n)?;
                    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// `f^{(order)}(t)`.
    pub fn derivative(&self, n: usize, t: f64, order: usize) -> Vec<f64> {
        match self {
            Forcing::None => vec![0.0; n],
            Forcing::Constant { a } => {
                if order == 0 {
                    a.clone()
                } else {
                    vec![0.0; n]
                }
            }
            Forcing::Polynomial { coeffs } => {
                let mut out = vec![0.0; n];
                for (k, c) in coeffs.iter().enumerate().skip(order) {
                    // k!/(k−order)! t^{k−order}
                    let falling: f64 = ((k - order + 1)..=k).map(|i| i as f64).product();
                    let w = falling * t.powi((k - order) as i32);
                    out.iter_mut().zip(c).for_each(|(o, ci)| *o += w * ci);
                }
                out
            }
            Forcing::Exponential { f0, alpha } => {
                let w = alpha.powi(order as i32) * (alpha * t).exp();
                f0.iter().map(|x| w * x).collect()
            }
            Forcing::Sinusoidal { f0, omega_f } => {
                let w = omega_f.powi(order as i32) * sin_derivative(omega_f * t, order);
                f0.iter().map(|x| w * x).collect()
            }
            Forcing::Sum { terms } => {
                let mut acc = vec![0.0; n];
                for term in terms {
                    let d = term.derivative(n, t, order);
                    acc.iter_mut().zip(d).for_each(|(a, b)| *a += b);
                }
                acc
            }
        }
    }

    pub fn eval(&self, n: usize, t: f64) -> Vec<f64> {
        self.derivative(n, t, 0)
    }
}

fn finite_scalar(v: f64, name: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(OscError::Domain(format!("{name} must be finite")))
    }
}

/// `d^k/dθ^k sin θ`
fn sin_derivative(theta: f64, k: usize) -> f64 {
    match k % 4 {
        0 => theta.sin(),
        1 => theta.cos(),
        2 => -theta.sin(),
        _ => -theta.cos(),
    }
}

/// Particular solution `Φ(t)` of `Φ̈ + Ω²Φ = f(t)` with every required
/// factorization done once up front.
#[derive(Debug, Clone)]
pub struct ParticularSolution {
    n: usize,
    parts: Vec<Part>,
}

#[derive(Debug, Clone)]
enum Part {
    Zero,
    /// `Ω⁻²a`
    Constant(Vec<f64>),
    /// `Φ = Ω⁻² Σ_k (−Ω⁻²)^k f^{(2k)}(t)`, finite because `f` is a polynomial
    Polynomial {
        forcing: Forcing,
        degree: usize,
        lu: LuDecomposition,
    },
    /// `Φ = e^{αt} (Ω² + α²I)⁻¹ f₀`
    Exponential {
        amplitude: Vec<f64>,
        alpha: f64,
    },
    /// `Φ = sin(ω_f t) (Ω² − ω_f²I)⁻¹ f₀`
    Sinusoidal {
        amplitude: Vec<f64>,
        omega_f: f64,
    },
}

impl ParticularSolution {
    pub fn new(forcing: &Forcing, a: &SquareMatrix) -> Result<Self> {
        let n = a.dim();
        forcing.validate(n)?;
        let mut parts = Vec::new();
        collect_parts(forcing, a, &mut parts)?;
        Ok(Self { n, parts })
    }

    /// `Φ^{(order)}(t)`, differentiated in closed form.
    pub fn derivative(&self, t: f64, order: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.n];
        for part in &self.parts {
            let d = part.derivative(self.n, t, order);
            acc.iter_mut().zip(d).for_each(|(a, b)| *a += b);
        }
        acc
    }

    /// `(Φ(t), Φ̇(t))`
    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        (self.derivative(t, 0), self.derivative(t, 1))
    }
}

impl Part {
    fn derivative(&self, n: usize, t: f64, order: usize) -> Vec<f64> {
        match self {
            Part::Zero => vec![0.0; n],
            Part::Constant(phi) => {
                if order == 0 {
                    phi.clone()
                } else {
                    vec![0.0; n]
                }
            }
            Part::Polynomial {
                forcing,
                degree,
                lu,
            } => {
                if order > *degree {
                    return vec![0.0; n];
                }
                // Horner form: Φ^{(j)} = Ω⁻² (f^{(j)} − Ω⁻² (f^{(j+2)} − …))
                let terms = (degree - order) / 2;
                let mut r = forcing.derivative(n, t, order + 2 * terms);
                for k in (0..terms).rev() {
                    let inner = lu.solve(&r);
                    r = forcing.derivative(n, t, order + 2 * k);
                    r.iter_mut().zip(inner).for_each(|(a, b)| *a -= b);
                }
                lu.solve(&r)
            }
            Part::Exponential { amplitude, alpha } => {
                let w = alpha.powi(order as i32) * (alpha * t).exp();
                amplitude.iter().map(|x| w * x).collect()
            }
            Part::Sinusoidal { amplitude, omega_f } => {
                let w = omega_f.powi(order as i32) * sin_derivative(omega_f * t, order);
                amplitude.iter().map(|x| w * x).collect()
            }
        }
    }
}

fn factor_or_resonant(m: &SquareMatrix, what: impl FnOnce() -> String) -> Result<LuDecomposition> {
    match LuDecomposition::new(m) {
        Ok(lu) => Ok(lu),
        Err(OscError::IllConditioned { condition }) => Err(OscError::ResonantForcing(format!(
            "{} (condition {condition:.3e})",
            what()
        ))),
        Err(e) => Err(e),
    }
}

fn collect_parts(forcing: &Forcing, a: &SquareMatrix, parts: &mut Vec<Part>) -> Result<()> {
    match forcing {
        Forcing::None => parts.push(Part::Zero),
        Forcing::Constant { a: force } => {
            let lu = factor_or_resonant(a, || "Omega^2 is singular, shift 0".into())?;
            parts.push(Part::Constant(lu.solve(force)));
        }
        Forcing::Polynomial { coeffs } => {
            let lu = factor_or_resonant(a, || "Omega^2 is singular, shift 0".into())?;
            parts.push(Part::Polynomial {
                forcing: forcing.clone(),
                degree: coeffs.len() - 1,
                lu,
            });
        }
        Forcing::Exponential { f0, alpha } => {
            let shift = alpha * alpha;
            let lu = factor_or_resonant(&a.shift(shift), || {
                format!("Omega^2 + alpha^2 I is singular, shift +{shift}")
            })?;
            parts.push(Part::Exponential {
                amplitude: lu.solve(f0),
                alpha: *alpha,
            });
        }
        Forcing::Sinusoidal { f0, omega_f } => {
            let shift = omega_f * omega_f;
            let lu = factor_or_resonant(&a.shift(-shift), || {
                format!(
                    "Omega^2 - omega_f^2 I is singular, shift -{shift}: omega_f^2 is an eigenvalue"
                )
            })?;
            parts.push(Part::Sinusoidal {
                amplitude: lu.solve(f0),
                omega_f: *omega_f,
            });
        }
        Forcing::Sum { terms } => {
            for term in terms {
                collect_parts(term, a, parts)?;
            }
        }
    }
    Ok(())
}

/// `(Φ(t), Φ̇(t))` for `forcing` and `a = Ω²`.
pub fn particular_solution(
    forcing: &Forcing,
    a: &SquareMatrix,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(ParticularSolution::new(forcing, a)?.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(forcing: &Forcing, a: &SquareMatrix, t: f64) -> f64 {
        let ps = ParticularSolution::new(forcing, a).unwrap();
        let phi = ps.derivative(t, 0);
        let acc = ps.derivative(t, 2);
        let aphi = a.mul_vec(&phi);
        let f = forcing.eval(a.dim(), t);
        acc.iter()
            .zip(&aphi)
            .zip(&f)
            .map(|((x, y), z)| (x + y - z).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_forcing() {
        let a = SquareMatrix::diag(&[2.0, 4.0]);
        let f = Forcing::Constant { a: vec![1.0, 2.0] };
        let (phi, dphi) = particular_solution(&f, &a, 3.0).unwrap();
        assert_eq!(phi, vec![0.5, 0.5]);
        assert_eq!(dphi, vec![0.0, 0.0]);
    }

    #[test]
    fn quadratic_polynomial_identity_matrix() {
        let a = SquareMatrix::identity(2);
        let f = Forcing::Polynomial {
            coeffs: vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]],
        };
        for &t in &[-1.5, 0.0, 0.7, 2.0] {
            let (phi, dphi) = particular_solution(&f, &a, t).unwrap();
            assert!((phi[0] - (t * t - 2.0)).abs() < 1e-14);
            assert!((dphi[0] - 2.0 * t).abs() < 1e-14);
            assert!(residual(&f, &a, t) < 1e-14);
        }
    }

    #[test]
    fn sinusoidal_amplitude() {
        let a = SquareMatrix::diag(&[1.0, 5.0]);
        let f = Forcing::Sinusoidal {
            f0: vec![1.0, 0.0],
            omega_f: 2.0,
        };
        let t = 0.37;
        let (phi, _) = particular_solution(&f, &a, t).unwrap();
        // (1 − 4) Φ₀ = 1
        assert!((phi[0] - (2.0 * t).sin() * (-1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(phi[1], 0.0);
        assert!(residual(&f, &a, t) < 1e-14);
    }

    #[test]
    fn resonant_sinusoid_rejected() {
        let a = SquareMatrix::diag(&[1.0, 4.0]);
        let f = Forcing::Sinusoidal {
            f0: vec![1.0, 1.0],
            omega_f: 2.0,
        };
        match ParticularSolution::new(&f, &a) {
            Err(OscError::ResonantForcing(msg)) => assert!(msg.contains("shift -4"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_matrix_rejects_polynomial() {
        let a = SquareMatrix::diag(&[0.0, 1.0]);
        let f = Forcing::Polynomial {
            coeffs: vec![vec![1.0, 1.0]],
        };
        assert!(matches!(
            ParticularSolution::new(&f, &a),
            Err(OscError::ResonantForcing(_))
        ));
    }

    #[test]
    fn zero_leading_coefficient_rejected() {
        let f = Forcing::Polynomial {
            coeffs: vec![vec![1.0], vec![0.0]],
        };
        assert!(f.validate(1).is_err());
    }

    #[test]
    fn sum_is_linear() {
        let a = SquareMatrix::from_rows(&[vec![3.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let p = Forcing::Polynomial {
            coeffs: vec![
                vec![1.0, 0.0],
                vec![0.0, 2.0],
                vec![0.5, 0.5],
                vec![0.1, -0.2],
            ],
        };
        let e = Forcing::Exponential {
            f0: vec![0.3, -1.0],
            alpha: 0.8,
        };
        let sum = Forcing::Sum {
            terms: vec![p.clone(), e.clone()],
        };
        let t = 1.3;
        let (a1, _) = particular_solution(&p, &a, t).unwrap();
        let (a2, _) = particular_solution(&e, &a, t).unwrap();
        let (s, _) = particular_solution(&sum, &a, t).unwrap();
        for i in 0..2 {
            assert!((s[i] - a1[i] - a2[i]).abs() < 1e-14);
        }
        assert!(residual(&sum, &a, t) < 1e-13);
    }

    #[test]
    fn serde_tagged() {
        let f: Forcing =
            serde_json::from_str(r#"{"type":"sinusoidal","f0":[1.0],"omega_f":2.0}"#).unwrap();
        assert_eq!(
            f,
            Forcing::Sinusoidal {
                f0: vec![1.0],
                omega_f: 2.0
            }
        );
        let none: Forcing = serde_json::from_str(r#"{"type":"none"}"#).unwrap();
        assert_eq!(none, Forcing::None);
    }
}

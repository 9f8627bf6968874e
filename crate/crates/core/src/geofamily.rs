//! Three-parameter family of symplectic linear maps
//!
//! ```text
//! x_{n+1} − γ x_n + x_{n−1} = 0,    p_n = α x_{n+1} − β x_n
//! ```
//!
//! acting on `(x, p)` through the matrix returned by [`family_matrix`].

use std::fmt;

use crate::error::{OscError, Result};
use crate::exact1d::RESONANCE_TOL;

pub type Mat2 = [[f64; 2]; 2];

/// Coefficients of one member of the family, evaluated at step `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
}

type Coefficient = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Step-size dependent coefficients `(α(ε), β(ε), γ(ε))`.
pub struct FamilyRule {
    name: String,
    alpha: Coefficient,
    beta: Coefficient,
    gamma: Coefficient,
}

impl fmt::Debug for FamilyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyRule")
            .field("name", &self.name)
            .finish()
    }
}

impl FamilyRule {
    pub fn new(
        name: impl Into<String>,
        alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            alpha: Box::new(alpha),
            beta: Box::new(beta),
            gamma: Box::new(gamma),
        }
    }

    /// `α = mω/sin ωε`, `β = mω cot ωε`, `γ = 2 cos ωε`: the exact oscillator.
    pub fn exact(m: f64, omega: f64) -> Self {
        Self::new(
            "exact",
            move |e| m * omega / (omega * e).sin(),
            move |e| m * omega / (omega * e).tan(),
            move |e| 2.0 * (omega * e).cos(),
        )
    }

    /// Störmer–Verlet-like member: `α = m/ε`, `β = (m/ε)(1 − ε²ω²/2)`,
    /// `γ = 2 − ε²ω²`.
    pub fn symmetric_euler(m: f64, omega: f64) -> Self {
        Self::new(
            "symmetric_euler",
            move |e| m / e,
            move |e| m / e * (1.0 - 0.5 * e * e * omega * omega),
            move |e| 2.0 - e * e * omega * omega,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self, eps: f64) -> FamilyParams {
        FamilyParams {
            alpha: (self.alpha)(eps),
            beta: (self.beta)(eps),
            gamma: (self.gamma)(eps),
            eps,
        }
    }
}

/// The matrix `A(ε)` with `(x_{n+1}, p_{n+1}) = A (x_n, p_n)`.
pub fn family_matrix(p: &FamilyParams) -> Result<Mat2> {
    let FamilyParams {
        alpha, beta, gamma, ..
    } = *p;
    if alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() || !gamma.is_finite() {
        return Err(OscError::Domain(format!(
            "family map needs finite coefficients and alpha != 0 (alpha = {alpha})"
        )));
    }
    let ba = beta / alpha;
    Ok([
        [ba, 1.0 / alpha],
        [
            gamma * beta - (alpha * alpha + beta * beta) / alpha,
            gamma - ba,
        ],
    ])
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Applies the family map to `(x, p)`.
pub fn family_step(p: &FamilyParams, x: f64, momentum: f64) -> Result<(f64, f64)> {
    let a = family_matrix(p)?;
    Ok((
        a[0][0] * x + a[0][1] * momentum,
        a[1][0] * x + a[1][1] * momentum,
    ))
}

/// `x_{n+1}² − γ x_{n+1} x_n + x_n²`, conserved along orbits of the map.
pub fn quadratic_invariant(x_n: f64, x_next: f64, gamma: f64) -> f64 {
    x_next * x_next - gamma * x_next * x_n + x_n * x_n
}

/// Outcome of [`check_reversibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversibilityReport {
    pub reversible: bool,
    /// `α(−ε) + α(ε)`
    pub alpha_residual: f64,
    /// `γ(ε) − (β(ε) − β(−ε))/α(ε)`
    pub gamma_residual: f64,
    /// `max |A(−ε) A(ε) − I|`, computed when both constraints hold.
    pub inverse_residual: Option<f64>,
}

pub const REVERSIBILITY_TOL: f64 = 1e-12;

/// Tests `α(−ε) = −α(ε)` and `γ(ε) = (β(ε) − β(−ε))/α(ε)`.
///
/// Residuals are compared relative to the size of the coefficients. When
/// both hold, `A(−ε) A(ε) = I` is also checked numerically and the rule is
/// reported reversible only if that product is the identity too.
pub fn check_reversibility(rule: &FamilyRule, eps: f64) -> Result<ReversibilityReport> {
    let fwd = rule.params(eps);
    let back = rule.params(-eps);
    if fwd.alpha == 0.0 || !fwd.alpha.is_finite() {
        return Err(OscError::Domain(format!(
            "alpha({eps}) = {} is not usable",
            fwd.alpha
        )));
    }
    let alpha_residual = back.alpha + fwd.alpha;
    let gamma_residual = fwd.gamma - (fwd.beta - back.beta) / fwd.alpha;
    let alpha_scale = fwd.alpha.abs().max(1.0);
    let gamma_scale = fwd.gamma.abs().max((fwd.beta / fwd.alpha).abs()).max(1.0);
    let constraints = alpha_residual.abs() <= REVERSIBILITY_TOL * alpha_scale
        && gamma_residual.abs() <= REVERSIBILITY_TOL * gamma_scale;
    let mut report = ReversibilityReport {
        reversible: false,
        alpha_residual,
        gamma_residual,
        inverse_residual: None,
    };
    if constraints {
        let prod = mat2_mul(&family_matrix(&back)?, &family_matrix(&fwd)?);
        let res = (prod[0][0] - 1.0)
            .abs()
            .max(prod[0][1].abs())
            .max(prod[1][0].abs())
            .max((prod[1][1] - 1.0).abs());
        let scale = family_matrix(&fwd)?
            .iter()
            .flatten()
            .fold(1.0_f64, |m, v| m.max(v.abs()));
        report.inverse_residual = Some(res);
        report.reversible = res <= REVERSIBILITY_TOL * scale * scale;
    }
    Ok(report)
}

/// Coefficients of the exact oscillator map at step `eps`.
pub fn exact_family_params(m: f64, omega: f64, eps: f64) -> Result<FamilyParams> {
    let sn = (omega * eps).sin();
    if sn.abs() < RESONANCE_TOL {
        return Err(OscError::ResonantStep(format!(
            "sin(omega eps) = {sn:.3e}; the exact family parameters are singular"
        )));
    }
    Ok(FamilyRule::exact(m, omega).params(eps))
}

/// `[[cos ωε, sin ωε/(mω)], [−mω sin ωε, cos ωε]]`
pub fn oscillator_matrix(m: f64, omega: f64, eps: f64) -> Mat2 {
    let (sn, cs) = (omega * eps).sin_cos();
    [[cs, sn / (m * omega)], [-m * omega * sn, cs]]
}

/// Richardson-extrapolated limits of `ε α(ε)`, `ε β(ε)` and `(2 − γ(ε))/ε²`
/// as `ε → 0`, using the steps `1e−2, 1e−3, 1e−4`.
///
/// All three expressions are even in `ε` for the rules of interest, so the
/// error expands in `ε²`; a two-column tableau with ratio 10 is used.
pub fn continuum_limits(rule: &FamilyRule) -> [f64; 3] {
    let probe = |e: f64| {
        let p = rule.params(e);
        [e * p.alpha, e * p.beta, (2.0 - p.gamma) / (e * e)]
    };
    let steps = [1e-2, 1e-3, 1e-4];
    let samples: Vec<[f64; 3]> = steps.iter().map(|&e| probe(e)).collect();
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let r1 = (100.0 * samples[1][k] - samples[0][k]) / 99.0;
        let r2 = (100.0 * samples[2][k] - samples[1][k]) / 99.0;
        // second column of the tableau removes the ε⁴ term
        *slot = (10_000.0 * r2 - r1) / 9_999.0;
    }
    out
}

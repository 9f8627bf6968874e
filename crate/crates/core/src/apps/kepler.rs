use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{OscError, Result};
use crate::exact1d::{exact_step, Osc1DSpec, Phase1D};

/// Planar Kepler orbit `m r̈ = −k r/r³` parameterized by the swept angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerSpec {
    pub m: f64,
    pub k: f64,
    /// Angular momentum `|r × m ṙ|`.
    #[serde(alias = "L")]
    pub l: f64,
    /// Initial `u = 1/r`.
    pub u0: f64,
    /// Initial `du/dφ`.
    pub du0: f64,
    pub dphi: f64,
    pub steps: usize,
}

/// One node of a propagated orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub phi: f64,
    pub u: f64,
    pub du: f64,
    pub r: f64,
    pub t: f64,
}

impl KeplerSpec {
    /// Orbit with eccentricity `e` starting at pericentre.
    pub fn from_eccentricity(m: f64, k: f64, l: f64, e: f64, dphi: f64, steps: usize) -> Self {
        let g = k * m / (l * l);
        Self {
            m,
            k,
            l,
            u0: g * (1.0 + e),
            du0: 0.0,
            dphi,
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m, self.k, self.l, self.u0, self.du0, self.dphi]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(OscError::Domain("Kepler parameters must be finite".into()));
        }
        if self.l == 0.0 {
            return Err(OscError::Domain(
                "angular momentum L must be nonzero".into(),
            ));
        }
        if !(self.m > 0.0 && self.k > 0.0) {
            return Err(OscError::Domain("m and k must be positive".into()));
        }
        if self.u0 <= 0.0 {
            return Err(OscError::OrbitUnbound {
                step: 0,
                u: self.u0,
            });
        }
        Ok(())
    }

    /// Driving term `km/L²` of the Binet equation `u″ + u = km/L²`.
    pub fn binet_force(&self) -> f64 {
        self.k * self.m / (self.l * self.l)
    }

    /// Eccentricity and pericentre angle of the conic through the initial
    /// data.
    pub fn conic(&self) -> (f64, f64) {
        let g = self.binet_force();
        let a = self.u0 - g;
        let b = self.du0;
        ((a * a + b * b).sqrt() / g, b.atan2(a))
    }

    /// `u(φ) = (km/L²)(1 + e cos(φ − φ₀))`
    pub fn conic_u(&self, phi: f64) -> f64 {
        let g = self.binet_force();
        let (e, phi0) = self.conic();
        g * (1.0 + e * (phi - phi0).cos())
    }

    /// Period `2π √(m a³/k)` of a bound orbit.
    pub fn period(&self) -> Result<f64> {
        let (e, _) = self.conic();
        if e >= 1.0 {
            return Err(OscError::Domain(format!(
                "orbit with e = {e} has no period"
            )));
        }
        let a = 1.0 / (self.binet_force() * (1.0 - e * e));
        Ok(2.0 * PI * (self.m * a * a * a / self.k).sqrt())
    }
}

/// Propagates `u = 1/r` with the exact driven-oscillator step in the angle
/// variable and recovers time by the trapezoid rule on `dt = (m r²/L) dφ`.
pub fn kepler_propagate(spec: &KeplerSpec) -> Result<Vec<OrbitSample>> {
    spec.validate()?;
    let osc = Osc1DSpec::driven(1.0, spec.binet_force());
    let weight = spec.m / spec.l.abs();
    let mut state = Phase1D::new(spec.u0, spec.du0, 0.0);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(spec.steps + 1);
    out.push(OrbitSample {
        phi: 0.0,
        u: state.x,
        du: state.v,
        r: 1.0 / state.x,
        t,
    });
    for n in 1..=spec.steps {
        state = exact_step(state, &osc, spec.dphi).map_err(|e| e.at_step(n))?;
        if !(state.x > 0.0) {
            return Err(OscError::OrbitUnbound {
                step: n,
                u: state.x,
            });
        }
        let prev = out[n - 1].r;
        let r = 1.0 / state.x;
        t += 0.5 * weight * spec.dphi * (prev * prev + r * r);
        out.push(OrbitSample {
            phi: n as f64 * spec.dphi,
            u: state.x,
            du: state.v,
            r,
            t,
        });
    }
    Ok(out)
}

/// Time for one revolution from `steps` equal angle steps over `2π`.
pub fn recovered_period(m: f64, k: f64, l: f64, e: f64, steps: usize) -> Result<f64> {
    let spec = KeplerSpec::from_eccentricity(m, k, l, e, 2.0 * PI / steps as f64, steps);
    let orbit = kepler_propagate(&spec)?;
    Ok(orbit[steps].t)
}

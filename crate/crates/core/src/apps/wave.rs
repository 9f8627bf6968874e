use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OscError, Result};
use crate::exact1d::RESONANCE_TOL;

/// One Fourier mode `û(t) e^{ikx}` with its initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveMode {
    pub k: f64,
    pub u0: Complex64,
    pub udot0: Complex64,
}

/// Linearized wave equation `u_tt = u_xx − a²u` given in Fourier modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    pub a: f64,
    pub modes: Vec<WaveMode>,
    pub dt: f64,
    pub steps: usize,
    /// Number of spatial samples for synthesized frames.
    #[serde(default)]
    pub grid: Option<usize>,
    /// Period of the spatial domain `[0, length)`.
    #[serde(default = "two_pi")]
    pub length: f64,
}

fn two_pi() -> f64 {
    2.0 * PI
}

impl WaveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.dt.is_finite() && self.length > 0.0) {
            return Err(OscError::Domain(
                "a, dt and length must be finite, length positive".into(),
            ));
        }
        if self.modes.is_empty() {
            return Err(OscError::Domain("wave spec needs at least one mode".into()));
        }
        for m in &self.modes {
            let w2 = m.k * m.k + self.a * self.a;
            if !(w2 > 0.0) || !m.k.is_finite() {
                return Err(OscError::Domain(format!(
                    "mode k = {} has omega^2 = {w2}, must be positive",
                    m.k
                )));
            }
            let fin = |z: Complex64| z.re.is_finite() && z.im.is_finite();
            if !(fin(m.u0) && fin(m.udot0)) {
                return Err(OscError::Domain("mode amplitudes must be finite".into()));
            }
        }
        if self.grid == Some(0) {
            return Err(OscError::Domain("grid must have at least one point".into()));
        }
        Ok(())
    }

    /// `ω = √(k² + a²)` per mode.
    pub fn frequencies(&self) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| (m.k * m.k + self.a * self.a).sqrt())
            .collect()
    }
}

/// Mode histories, indexed `[mode][n]`, plus optional real-space frames
/// indexed `[n][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveResult {
    pub omegas: Vec<f64>,
    pub history: Vec<Vec<Complex64>>,
    pub frames: Option<Vec<Vec<f64>>>,
}

/// Evolves every mode with `û^{n+1} = 2 cos(ωΔt) û^n − û^{n−1}`, seeding
/// `û¹` with the exact one-step map.
pub fn wave_propagate(spec: &WaveSpec) -> Result<WaveResult> {
    spec.validate()?;
    let omegas = spec.frequencies();
    let history: Vec<Vec<Complex64>> = spec
        .modes
        .par_iter()
        .zip(omegas.par_iter())
        .map(|(m, &w)| mode_history(m, w, spec.dt, spec.steps))
        .collect();
    let frames = spec.grid.map(|grid| {
        (0..=spec.steps)
            .map(|n| {
                let amps: Vec<Complex64> = history.iter().map(|h| h[n]).collect();
                synthesize(&spec.modes, &amps, grid, spec.length)
                    .into_iter()
                    .map(|z| z.re)
                    .collect()
            })
            .collect()
    });
    Ok(WaveResult {
        omegas,
        history,
        frames,
    })
}

fn mode_history(m: &WaveMode, w: f64, dt: f64, steps: usize) -> Vec<Complex64> {
    let (s, c) = (w * dt).sin_cos();
    let mut h = Vec::with_capacity(steps + 1);
    h.push(m.u0);
    if steps >= 1 {
        h.push(m.u0 * c + m.udot0 * (s / w));
    }
    let c2 = 2.0 * c;
    for n in 1..steps {
        let next = h[n] * c2 - h[n - 1];
        h.push(next);
    }
    h
}

/// `Σ_k û_k e^{ikx_j}` at `x_j = j·length/grid`.
pub fn synthesize(
    modes: &[WaveMode],
    amps: &[Complex64],
    grid: usize,
    length: f64,
) -> Vec<Complex64> {
    (0..grid)
        .map(|j| {
            let x = j as f64 * length / grid as f64;
            modes
                .iter()
                .zip(amps)
                .map(|(m, a)| a * Complex64::from_polar(1.0, m.k * x))
                .sum()
        })
        .collect()
}

/// Phase advance per unit time recovered from a sampled mode history.
///
/// Exact recurrence samples satisfy `2û^n − û^{n+1} − û^{n−1} = 2(1 − cos θ) û^n`.
/// The least-squares estimate of `1 − cos θ` is formed with compensated
/// sums and inverted through `θ = 2 asin(√((1 − cos θ)/2))`, which stays
/// well conditioned for small `θ`.
pub fn numerical_frequency(history: &[Complex64], dt: f64) -> Result<f64> {
    if history.len() < 3 {
        return Err(OscError::Domain("need at least three samples".into()));
    }
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for n in 1..history.len() - 1 {
        let second = history[n] * 2.0 - history[n + 1] - history[n - 1];
        num.add((second * history[n].conj()).re);
        den.add(2.0 * history[n].norm_sqr());
    }
    let den = den.value();
    if den == 0.0 {
        return Err(OscError::Domain("mode history is identically zero".into()));
    }
    let vers = (num.value() / den).clamp(0.0, 2.0);
    Ok(2.0 * (0.5 * vers).sqrt().asin() / dt)
}

/// Neumaier summation.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `½|û̇|² + ½ω²|û|²` at every interior node, with `û̇` from the exact
/// central formula `ω(û^{n+1} − û^{n−1})/(2 sin ωΔt)`.
pub fn mode_energy(history: &[Complex64], omega: f64, dt: f64) -> Result<Vec<f64>> {
    let s = (omega * dt).sin();
    if s.abs() < RESONANCE_TOL {
        return Err(OscError::VelocityNotRecoverable { sin: s });
    }
    let scale = omega / (2.0 * s);
    Ok((1..history.len().saturating_sub(1))
        .map(|n| {
            let v = (history[n + 1] - history[n - 1]) * scale;
            0.5 * v.norm_sqr() + 0.5 * omega * omega * history[n].norm_sqr()
        })
        .collect())
}

/// Centre of `|U(x)|²` for a packet synthesized on `grid` points, read off
/// the phase of its first spatial Fourier coefficient (wavenumber
/// `2π/length`).
pub fn packet_centroid(field: &[Complex64], length: f64) -> f64 {
    let grid = field.len();
    let kappa = 2.0 * PI / length;
    let z: Complex64 = field
        .iter()
        .enumerate()
        .map(|(j, u)| {
            let x = j as f64 * length / grid as f64;
            u.norm_sqr() * Complex64::from_polar(1.0, kappa * x)
        })
        .sum();
    // |U|² ∝ A + B cos(κ(x − x_c)) gives z ∝ e^{iκ x_c}
    z.arg() / kappa
}

/// Velocity of the packet centroid by least-squares regression over the
/// whole run, unwrapping the periodic centroid track.
pub fn group_velocity_estimate(spec: &WaveSpec, result: &WaveResult, grid: usize) -> f64 {
    let half = 0.5 * spec.length;
    let mut prev = None;
    let mut offset = 0.0;
    let mut pts = Vec::with_capacity(spec.steps + 1);
    for n in 0..=spec.steps {
        let amps: Vec<Complex64> = result.history.iter().map(|h| h[n]).collect();
        let field = synthesize(&spec.modes, &amps, grid, spec.length);
        let c = packet_centroid(&field, spec.length);
        if let Some(p) = prev {
            let jump: f64 = c - p;
            if jump > half {
                offset -= spec.length;
            } else if jump < -half {
                offset += spec.length;
            }
        }
        prev = Some(c);
        pts.push((n as f64 * spec.dt, c + offset));
    }
    let m = pts.len() as f64;
    let (st, sx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, x)| (a + t, b + x));
    let (mt, mx) = (st / m, sx / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (t, x)| {
        (a + (t - mt) * (x - mx), b + (t - mt) * (t - mt))
    });
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(k: f64, a: f64, dt: f64, steps: usize) -> WaveSpec {
        WaveSpec {
            a,
            modes: vec![WaveMode {
                k,
                u0: Complex64::new(1.0, 0.0),
                udot0: Complex64::new(0.0, 0.0),
            }],
            dt,
            steps,
            grid: None,
            length: 2.0 * PI,
        }
    }

    #[test]
    fn zero_wavenumber_is_cosine() {
        let spec = single(0.0, 1.0, 0.1, 100);
        let r = wave_propagate(&spec).unwrap();
        for (n, u) in r.history[0].iter().enumerate() {
            assert!((u.re - (0.1 * n as f64).cos()).abs() < 1e-13);
            assert_eq!(u.im, 0.0);
        }
    }

    #[test]
    fn numerical_frequency_is_exact() {
        let spec = single(3.0, 4.0, 0.1, 200);
        let r = wave_propagate(&spec).unwrap();
        let w = numerical_frequency(&r.history[0], spec.dt).unwrap();
        assert!((w - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mode_energy_constant() {
        let mut spec = single(2.0, 1.0, 0.1, 1000);
        spec.modes[0].udot0 = Complex64::new(0.3, -0.7);
        let r = wave_propagate(&spec).unwrap();
        let e = mode_energy(&r.history[0], r.omegas[0], spec.dt).unwrap();
        let e0 = 0.5 * (0.09 + 0.49) + 0.5 * 5.0;
        for x in e {
            assert!((x - e0).abs() < 1e-12);
        }
    }

    #[test]
    fn frames_have_grid_width() {
        let mut spec = single(1.0, 1.0, 0.1, 3);
        spec.grid = Some(8);
        let r = wave_propagate(&spec).unwrap();
        let frames = r.frames.unwrap();
        assert_eq!(frames.len(), 4);
        assert!(frames.iter().all(|f| f.len() == 8));
        assert!((frames[0][0] - 1.0).abs() < 1e-15);
    }
}

//! Fine-step classical Runge–Kutta reference integrator for first-order
//! systems `ẏ = F(t, y)`.
//!
//! Used where no closed form exists (nonlinear problems) and as a
//! cross-check elsewhere. Two runs at `h` and `h/2` are combined by
//! Richardson extrapolation.

/// One classical RK4 step.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let n = y.len();
    let k1 = f(t, y);
    let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let k2 = f(t + 0.5 * h, &y2);
    let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
    let k3 = f(t + 0.5 * h, &y3);
    let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
    let k4 = f(t + h, &y4);
    (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates from `t0` to `t1` with equal steps no longer than `max_step`.
pub fn rk4_integrate<F>(f: &F, t0: f64, y0: &[f64], t1: f64, max_step: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return y0.to_vec();
    }
    let steps = (span.abs() / max_step).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut y = y0.to_vec();
    for k in 0..steps {
        y = rk4_step(f, t0 + k as f64 * h, &y, h);
    }
    y
}

/// `(16 y_{h/2} − y_h)/15`, fifth order in `max_step`.
pub fn rk4_extrapolated<F>(f: &F, t0: f64, y0: &[f64], t1: f64, max_step: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let coarse = rk4_integrate(f, t0, y0, t1, max_step);
    let fine = rk4_integrate(f, t0, y0, t1, 0.5 * max_step);
    coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (16.0 * f - c) / 15.0)
        .collect()
}

/// Reference solution at each of `times`, integrating interval by
/// interval from `(t0, y0)`.
pub fn reference_samples<F>(
    f: &F,
    t0: f64,
    y0: &[f64],
    times: &[f64],
    max_step: f64,
) -> Vec<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0.to_vec();
    for &tn in times {
        y = rk4_extrapolated(f, t, &y, tn, max_step);
        t = tn;
        out.push(y.clone());
    }
    out
}

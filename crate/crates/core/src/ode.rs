//! Classical fixed-step Runge–Kutta for scalar equations y' = f(u, y).

pub fn rk4_step<F: Fn(f64, f64) -> f64>(f: &F, u: f64, y: f64, h: f64) -> f64 {
    let k1 = f(u, y);
    let k2 = f(u + 0.5 * h, y + 0.5 * h * k1);
    let k3 = f(u + 0.5 * h, y + 0.5 * h * k2);
    let k4 = f(u + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates from u = 0 to u = t in ceil(|t|/h) equal steps.
pub fn rk4_integrate<F: Fn(f64, f64) -> f64>(f: &F, y0: f64, t: f64, h: f64) -> f64 {
    let n = steps_for(t, h);
    if n == 0 {
        return y0;
    }
    let dt = t / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(f, i as f64 * dt, y, dt);
    }
    y
}

pub(crate) fn steps_for(t: f64, h: f64) -> usize {
    if t == 0.0 {
        0
    } else {
        (t.abs() / h).ceil().max(1.0) as usize
    }
}

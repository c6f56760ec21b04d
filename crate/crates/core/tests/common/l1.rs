//! L1-type discretization of the Caputo derivative, used only as an
//! independent residual check of computed trajectories.
//!
//! For 1 < α < 2, ∂_t^α u = (1/Γ(2-α)) ∫_0^t (t-s)^{1-α} u''(s) ds. The
//! velocity u' is replaced by the piecewise-linear interpolant v through
//! (0, u1) and the difference quotients (u_n - u_{n-1})/h_n placed at the
//! midpoints t_{n-1/2}. Then v' is piecewise constant and the convolution is
//! exact, giving D_n at each midpoint.

use statrs::function::gamma::gamma;

/// Discrete Caputo derivatives D_n at t_{n-1/2}, n = 1..M.
pub fn caputo_midpoints(times: &[f64], u: &[f64], u1: f64, alpha: f64) -> Vec<f64> {
    let m = times.len() - 1;
    let mut tau = Vec::with_capacity(m + 1);
    let mut v = Vec::with_capacity(m + 1);
    tau.push(0.0);
    v.push(u1);
    for n in 1..=m {
        tau.push(0.5 * (times[n] + times[n - 1]));
        v.push((u[n] - u[n - 1]) / (times[n] - times[n - 1]));
    }
    let slopes: Vec<f64> = (0..m).map(|i| (v[i + 1] - v[i]) / (tau[i + 1] - tau[i])).collect();
    let e = 2.0 - alpha;
    let g = gamma(3.0 - alpha);
    (1..=m)
        .map(|n| {
            let t = tau[n];
            (0..n)
                .map(|i| slopes[i] * ((t - tau[i]).powf(e) - (t - tau[i + 1]).powf(e)))
                .sum::<f64>()
                / g
        })
        .collect()
}

/// Σ_n h_n |D_n + λ u(t_{n-1/2}) - f(t_{n-1/2})|, with midpoint values
/// taken as averages of the neighbouring nodes.
pub fn caputo_residual(times: &[f64], u: &[f64], u1: f64, lambda: f64, f: &[f64], alpha: f64) -> f64 {
    let d = caputo_midpoints(times, u, u1, alpha);
    (1..times.len())
        .map(|n| {
            let um = 0.5 * (u[n] + u[n - 1]);
            let fm = 0.5 * (f[n] + f[n - 1]);
            (times[n] - times[n - 1]) * (d[n - 1] + lambda * um - fm).abs()
        })
        .sum()
}

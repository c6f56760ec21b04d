//! Two-parameter Mittag-Leffler function on the non-positive real axis.
//!
//! E_{α,β}(z) = Σ_{k≥0} z^k / Γ(αk + β)
//!
//! For z = -y with y ≥ 0 three representations are combined:
//!
//! * the defining power series, used while its alternating terms do not
//!   cancel badly (y ≤ 10 and a bounded ratio Σ|t_k| / |Σ t_k|);
//! * the algebraic asymptotic expansion -Σ_{k≥1} z^{-k}/Γ(β-αk), truncated
//!   before its smallest term, once that term is below double precision;
//! * the exact contour-integral representation in between.
//!
//! For 1 < α ≤ 2 the last two carry the contribution of the two complex
//! conjugate poles ζ^α = z of the Hankel integrand,
//! (2/α) Re[ζ^{1-β} exp ζ] with ζ = y^{1/α} e^{iπ/α}, which is what turns
//! E_{2,1}(-y) into cos √y. Parameters with β ≥ α + 1 are reduced through
//! E_{α,β}(z) = 1/Γ(β) + z E_{α,α+β}(z).

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{check, Error, Result};
use crate::quad;

/// Largest |z| for which the power series is tried.
pub const SERIES_LIMIT: f64 = 10.0;

/// Accept the series when Σ|t_k| / |Σ t_k| stays below this bound.
const SERIES_MAX_CANCELLATION: f64 = 1.0e3;

/// Order and parameter of E_{α,β}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check(alpha.is_finite() && alpha > 0.0 && alpha <= 2.0, || {
            Error::Parameter(format!("Mittag-Leffler order must lie in (0, 2], got {alpha}"))
        })?;
        check(beta.is_finite(), || {
            Error::Parameter(format!("Mittag-Leffler parameter must be finite, got {beta}"))
        })?;
        Ok(Self { alpha, beta })
    }
}

/// Which representation to use; `Auto` is what `mlf_eval` does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Auto,
    Series,
    Integral,
    Asymptotic,
}

/// Reciprocal gamma function, an entire function vanishing at 0, -1, -2, ...
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x > 170.0 {
        return (-ln_gamma(x)).exp();
    }
    if x == x.floor() {
        // (n-1)! is exact in double precision up to n = 23.
        let mut f = 1.0f64;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return 1.0 / f;
    }
    if x < 0.5 {
        // 1/Γ(x) = sin(πx) Γ(1-x) / π
        let s = sin_pi(x);
        let one_minus = 1.0 - x;
        if one_minus > 170.0 {
            let mag = (ln_gamma(one_minus) - PI.ln()).exp();
            return s * mag;
        }
        return s * gamma(one_minus) / PI;
    }
    1.0 / gamma(x)
}

/// sin(πx) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).floor();
    // r in [0, 2)
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r < 0.5 {
        (PI * r).sin()
    } else if r < 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

/// E_{α,β}(x) for x ≤ 0.
pub fn mlf_eval(params: MLParams, x: f64) -> Result<f64> {
    mlf_eval_with(params, x, Representation::Auto)
}

/// E_{α,β}(x) for x ≤ 0 through a specific representation.
pub fn mlf_eval_with(params: MLParams, x: f64, repr: Representation) -> Result<f64> {
    let params = MLParams::new(params.alpha, params.beta)?;
    check(x <= 0.0 && !x.is_nan(), || {
        Error::Domain(format!("Mittag-Leffler evaluation is restricted to x ≤ 0, got {x}"))
    })?;
    let (alpha, beta, y) = (params.alpha, params.beta, -x);
    let value = match repr {
        Representation::Auto => ml_neg(alpha, beta, y),
        Representation::Series => series(alpha, beta, y).0,
        Representation::Integral => {
            check(alpha != 1.0, || {
                Error::Parameter("integral representation needs α ≠ 1".into())
            })?;
            if y == 0.0 {
                rgamma(beta)
            } else {
                reduced(alpha, beta, y, &|a, b, y| integral(a, b, y))
            }
        }
        Representation::Asymptotic => {
            check(alpha != 1.0 && y > 0.0, || {
                Error::Parameter("asymptotic expansion needs α ≠ 1 and x < 0".into())
            })?;
            reduced(alpha, beta, y, &|a, b, y| {
                asymptotic(a, b, y).map(|(v, _)| v).unwrap_or(f64::NAN)
            })
        }
    };
    if value.is_nan() {
        return Err(Error::Parameter(format!(
            "E_{{{alpha},{beta}}}({x}) is not supported by the selected representation"
        )));
    }
    Ok(value)
}

/// E_{α,β}(-y), y ≥ 0, without argument validation.
pub(crate) fn ml_neg(alpha: f64, beta: f64, y: f64) -> f64 {
    if y == 0.0 {
        return rgamma(beta);
    }
    if alpha == 1.0 {
        return order_one(beta, y);
    }
    if y <= SERIES_LIMIT {
        let (sum, abs_sum) = series(alpha, beta, y);
        if abs_sum <= SERIES_MAX_CANCELLATION * sum.abs() {
            return sum;
        }
    }
    reduced(alpha, beta, y, &|a, b, y| match asymptotic(a, b, y) {
        Some((v, err)) if err <= 1e-16 * v.abs() => v,
        _ => integral(a, b, y),
    })
}

/// Applies E_{α,β}(-y) = (1/Γ(β-α) - E_{α,β-α}(-y)) / y until β < α + 1.
fn reduced(alpha: f64, beta: f64, y: f64, base: &dyn Fn(f64, f64, f64) -> f64) -> f64 {
    if beta >= alpha + 1.0 {
        let lower = beta - alpha;
        let inner = if y <= SERIES_LIMIT {
            let (sum, abs_sum) = series(alpha, lower, y);
            if abs_sum <= SERIES_MAX_CANCELLATION * sum.abs() {
                sum
            } else {
                reduced(alpha, lower, y, base)
            }
        } else {
            reduced(alpha, lower, y, base)
        };
        (rgamma(lower) - inner) / y
    } else {
        base(alpha, beta, y)
    }
}

/// Power series of E_{α,β}(-y); returns the sum and Σ|t_k|.
fn series(alpha: f64, beta: f64, y: f64) -> (f64, f64) {
    if y == 0.0 {
        return (rgamma(beta), rgamma(beta).abs());
    }
    let ln_y = y.ln();
    let peak = y.powf(1.0 / alpha);
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut compensation = 0.0;
    for k in 0..4000usize {
        let arg = alpha * k as f64 + beta;
        let mag = if arg <= 170.0 && (k as f64) * ln_y < 700.0 {
            y.powi(k as i32) * rgamma(arg)
        } else {
            (k as f64 * ln_y - ln_gamma(arg)).exp()
        };
        let term = if k % 2 == 0 { mag } else { -mag };
        // Kahan summation keeps the rounding of the running sum below the
        // accuracy of the individual terms.
        let t = term - compensation;
        let s = sum + t;
        compensation = (s - sum) - t;
        sum = s;
        abs_sum += mag.abs();
        if arg > peak + 2.0 && mag.abs() <= 1e-18 * abs_sum {
            break;
        }
    }
    (sum, abs_sum)
}

/// Contribution of the poles ζ = y^{1/α} e^{±iπ/α} for 1 < α ≤ 2.
fn pole_term(alpha: f64, beta: f64, y: f64) -> f64 {
    if alpha <= 1.0 {
        return 0.0;
    }
    let rho = y.powf(1.0 / alpha);
    let theta = PI / alpha;
    let amplitude = (2.0 / alpha) * rho.powf(1.0 - beta) * (rho * theta.cos()).exp();
    amplitude * (theta * (1.0 - beta) + rho * theta.sin()).cos()
}

/// Asymptotic expansion truncated before its smallest term. Returns the
/// value and the magnitude of the smallest retained term as error estimate.
fn asymptotic(alpha: f64, beta: f64, y: f64) -> Option<(f64, f64)> {
    let pole = pole_term(alpha, beta, y);
    let ln_y = y.ln();
    let mut sum = 0.0;
    let mut smallest = f64::INFINITY;
    let mut any_nonzero = false;
    for k in 1..=400usize {
        let arg = beta - alpha * k as f64;
        // Near the poles of Γ the factor sin(πx) makes single terms tiny;
        // truncation is decided on the envelope Γ(1-x)/π instead.
        let envelope = if arg < 0.5 {
            (ln_gamma(1.0 - arg) - PI.ln() - k as f64 * ln_y).exp()
        } else {
            rgamma(arg).abs() * (-(k as f64) * ln_y).exp()
        };
        if !envelope.is_finite() || envelope > smallest {
            break;
        }
        smallest = envelope;
        let rg = rgamma(arg);
        if rg == 0.0 {
            continue;
        }
        any_nonzero = true;
        let mag = (rg.abs().ln() - k as f64 * ln_y).exp();
        let sign = rg.signum() * if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * mag;
        if envelope < 1e-20 * (sum + pole).abs() {
            break;
        }
    }
    let value = pole + sum;
    let err = if any_nonzero { smallest } else { 0.0 };
    if !value.is_finite() {
        return None;
    }
    Some((value, err))
}

/// Exact representation for α ≠ 1, β < α + 1:
/// E_{α,β}(-y) = pole term - (1/π) ∫_0^∞ e^{-r} r^{α-β}
///     (y sin π(α-β) - r^α sin πβ) / (r^{2α} + 2 y r^α cos πα + y²) dr.
fn integral(alpha: f64, beta: f64, y: f64) -> f64 {
    debug_assert!(beta < alpha + 1.0);
    let s1 = sin_pi(alpha - beta);
    let s2 = sin_pi(beta);
    let c = cos_pi(alpha);
    let kappa = alpha - beta + 1.0;

    let body = |r: f64| -> f64 {
        let ra = r.powf(alpha);
        let denom = ra * ra + 2.0 * y * ra * c + y * y;
        (-r).exp() * (y * s1 - ra * s2) / denom
    };

    let peak = y.powf(1.0 / alpha);
    let r_max = 80.0f64;
    let r0 = 1.0f64.min(0.5 * peak);

    // On [0, r0] substitute r = w^{1/κ} so that r^{α-β} dr = dw / κ.
    let near = quad::integrate_breaks(
        |w: f64| {
            let r = w.powf(1.0 / kappa);
            body(r) / kappa
        },
        &[0.0, 0.5 * r0.powf(kappa), r0.powf(kappa)],
        1e-300,
        1e-15,
        400,
    );

    let mut breaks = vec![r0];
    for f in [0.5, 0.8, 1.0, 1.25, 2.0] {
        let b = f * peak;
        if b > r0 && b < r_max {
            breaks.push(b);
        }
    }
    for b in [5.0, 15.0, 35.0] {
        if b > r0 {
            breaks.push(b);
        }
    }
    breaks.push(r_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let far = quad::integrate_breaks(
        |r: f64| r.powf(alpha - beta) * body(r),
        &breaks,
        1e-300,
        1e-15,
        1000,
    );

    pole_term(alpha, beta, y) - (near.value + far.value) / PI
}

/// E_{1,β}(-y).
fn order_one(beta: f64, y: f64) -> f64 {
    if beta == 1.0 {
        return (-y).exp();
    }
    if beta == 2.0 {
        return -(-y).exp_m1() / y;
    }
    if beta == beta.floor() && beta <= 0.0 {
        // E_{1,-m}(-y) = (-y)^{m+1} e^{-y}
        let m = -beta;
        return (-y).powf(m + 1.0) * (-y).exp();
    }
    if y <= SERIES_LIMIT {
        let (sum, abs_sum) = series(1.0, beta, y);
        if abs_sum <= SERIES_MAX_CANCELLATION * sum.abs() {
            return sum;
        }
    }
    if beta == beta.floor() {
        // Upward recurrence from E_{1,2}; stable once y exceeds β.
        let mut value = -(-y).exp_m1() / y;
        let mut b = 2.0;
        while b < beta {
            value = (rgamma(b) - value) / y;
            b += 1.0;
        }
        return value;
    }
    if beta > 1.0 {
        // E_{1,β}(-y) = 1/Γ(β-1) ∫_0^1 e^{-ys} (1-s)^{β-2} ds, with
        // u = (1-s)^{β-1} removing the endpoint singularity.
        let p = beta - 1.0;
        let knee = (1.0 - 1.0 / y).max(0.0);
        let knee_u = knee.powf(p);
        let r = quad::integrate_breaks(
            |u: f64| (-y * (1.0 - u.powf(1.0 / p))).exp() / p,
            &[0.0, knee_u, 1.0],
            1e-300,
            1e-15,
            1000,
        );
        return r.value * rgamma(p);
    }
    f64::NAN
}

/// ∫_0^t s^{α-1} E_{α,α}(-λ s^α) ds = t^α E_{α,α+1}(-λ t^α).
pub fn mlf_moment(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    check_moment_args(alpha, lambda, t)?;
    Ok(moment0(alpha, lambda, t))
}

/// ∫_0^t (t-s)^{α-1} E_{α,α}(-λ (t-s)^α) s ds = t^{α+1} E_{α,α+2}(-λ t^α).
pub fn mlf_first_moment(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    check_moment_args(alpha, lambda, t)?;
    Ok(moment1(alpha, lambda, t))
}

fn check_moment_args(alpha: f64, lambda: f64, t: f64) -> Result<()> {
    MLParams::new(alpha, alpha + 1.0)?;
    check(lambda > 0.0 && lambda.is_finite(), || {
        Error::Domain(format!("moment needs λ > 0, got {lambda}"))
    })?;
    check(t > 0.0 && t.is_finite(), || Error::Domain(format!("moment needs t > 0, got {t}")))
}

pub(crate) fn moment0(alpha: f64, lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let ta = t.powf(alpha);
    ta * ml_neg(alpha, alpha + 1.0, lambda * ta)
}

pub(crate) fn moment1(alpha: f64, lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let ta = t.powf(alpha);
    ta * t * ml_neg(alpha, alpha + 2.0, lambda * ta)
}

/// Empirical constant of the decay bound |E_{α,β}(-x)| ≤ C / (1 + x):
/// the supremum of (1 + x)|E_{α,β}(-x)| over x = 0 and a log-spaced grid
/// on [1e-4, x_max], with each near-maximal grid peak refined by a
/// golden-section search in log x.
pub fn mlf_bound_constant(params: MLParams, x_max: f64, grid_size: usize) -> Result<f64> {
    let params = MLParams::new(params.alpha, params.beta)?;
    check(x_max > 0.0 && x_max.is_finite(), || {
        Error::Domain(format!("x_max must be positive, got {x_max}"))
    })?;
    check(grid_size >= 3, || Error::Validation("grid_size must be at least 3".into()))?;
    let (alpha, beta) = (params.alpha, params.beta);
    let weighted = |x: f64| (1.0 + x) * ml_neg(alpha, beta, x).abs();

    let lo = 1e-4f64.min(0.5 * x_max).ln();
    let hi = x_max.ln();
    let n = grid_size - 1;
    let logs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = logs.iter().map(|&l| weighted(l.exp())).collect();

    let mut best = weighted(0.0);
    let grid_max = values.iter().cloned().fold(best, f64::max);
    for i in 0..n {
        best = best.max(values[i]);
        let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < n { values[i + 1] } else { f64::NEG_INFINITY };
        if values[i] >= left && values[i] >= right && values[i] >= 0.9 * grid_max {
            let a = if i > 0 { logs[i - 1] } else { logs[i] };
            let b = if i + 1 < n { logs[i + 1] } else { logs[i] };
            if b > a {
                best = best.max(golden_max(|l| weighted(l.exp()), a, b));
            }
        }
    }
    Ok(best)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = fc.max(fd);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    best
}

/// Chebyshev nodes per table panel.
const TABLE_NODES: usize = 25;

/// Piecewise Chebyshev interpolant of y ↦ E_{α,β}(-y) on [0, y_max],
/// built by adaptive bisection from the direct evaluator. Arguments past
/// `y_max` fall back to [`mlf_eval`]'s algorithm, which is already cheap
/// there because the asymptotic expansion converges in a few terms.
///
/// The solvers evaluate the same (α, β) pairs millions of times; a table
/// costs a few thousand direct evaluations and answers in about 100 ns.
#[derive(Debug, Clone)]
pub struct MittagLefflerTable {
    alpha: f64,
    beta: f64,
    breaks: Vec<f64>,
    coeffs: Vec<[f64; TABLE_NODES]>,
}

impl MittagLefflerTable {
    /// Table covering [0, min(y_max, 80^α)] (at least [0, 1]) with absolute
    /// error about 1e-13 times the local magnitude of the function.
    pub fn new(params: MLParams, y_max: f64) -> Result<Self> {
        let params = MLParams::new(params.alpha, params.beta)?;
        check(y_max.is_finite() && y_max >= 0.0, || {
            Error::Domain(format!("table range must be finite and nonnegative, got {y_max}"))
        })?;
        let (alpha, beta) = (params.alpha, params.beta);
        let top = y_max.min(80f64.powf(alpha)).max(1.0);
        let mut edges = vec![0.0, 1.0];
        while *edges.last().unwrap() < top {
            let next = 2.0 * edges.last().unwrap();
            edges.push(next.min(top));
        }
        let mut breaks = vec![0.0];
        let mut coeffs = Vec::new();
        for w in edges.windows(2) {
            if w[1] > w[0] {
                fit_panel(alpha, beta, w[0], w[1], 0, f64::INFINITY, &mut breaks, &mut coeffs);
            }
        }
        if coeffs.is_empty() {
            return Err(Error::Parameter(format!("could not tabulate E_{{{alpha},{beta}}}")));
        }
        Ok(Self { alpha, beta, breaks, coeffs })
    }

    pub fn params(&self) -> MLParams {
        MLParams { alpha: self.alpha, beta: self.beta }
    }

    /// Upper end of the tabulated range.
    pub fn range(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    /// E_{α,β}(-y) for y ≥ 0.
    pub fn eval(&self, y: f64) -> f64 {
        let top = self.range();
        if y > top {
            return ml_neg(self.alpha, self.beta, y);
        }
        let i = match self.breaks.partition_point(|&b| b <= y) {
            0 => 0,
            k => (k - 1).min(self.coeffs.len() - 1),
        };
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        let x = (2.0 * y - a - b) / (b - a);
        clenshaw(&self.coeffs[i], x)
    }
}

fn fit_panel(
    alpha: f64,
    beta: f64,
    a: f64,
    b: f64,
    depth: usize,
    parent_tail: f64,
    breaks: &mut Vec<f64>,
    coeffs: &mut Vec<[f64; TABLE_NODES]>,
) {
    let n = TABLE_NODES;
    let theta: Vec<f64> = (0..n).map(|k| PI * (k as f64 + 0.5) / n as f64).collect();
    let values: Vec<f64> = theta
        .iter()
        .map(|t| ml_neg(alpha, beta, 0.5 * (a + b) + 0.5 * (b - a) * t.cos()))
        .collect();
    let mut c = [0.0; TABLE_NODES];
    for (j, cj) in c.iter_mut().enumerate() {
        let s: f64 = values.iter().zip(&theta).map(|(v, t)| v * (j as f64 * t).cos()).sum();
        *cj = 2.0 * s / n as f64;
    }
    c[0] *= 0.5;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail = c[n - 1].abs() + c[n - 2].abs() + c[n - 3].abs();
    // Once the tail stops shrinking under bisection it is rounding noise
    // in the sampled values, and splitting further cannot help.
    let stalled = depth >= 4 && tail >= 0.25 * parent_tail;
    if tail <= 1e-13 * scale || stalled || depth >= 30 || scale == 0.0 {
        breaks.push(b);
        coeffs.push(c);
    } else {
        let mid = 0.5 * (a + b);
        fit_panel(alpha, beta, a, mid, depth + 1, tail, breaks, coeffs);
        fit_panel(alpha, beta, mid, b, depth + 1, tail, breaks, coeffs);
    }
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

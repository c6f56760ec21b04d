//! Quadrature rules: Gauss-Legendre panels and an adaptive Gauss-Kronrod
//! integrator for the scalar integrals the special-function code needs.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels of
/// `order` nodes each.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let breaks: Vec<f64> = (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect();
    gauss_legendre_on_breaks(&breaks, order)
}

/// Gauss-Legendre rule of the given order on each interval `[breaks[i], breaks[i+1]]`.
pub fn gauss_legendre_on_breaks(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity((breaks.len().saturating_sub(1)) * order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in xs.iter().zip(&ws) {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    (nodes, weights)
}

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    /// Integral of the absolute value, used to scale tolerances.
    pub abs_value: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let value = res_k * half;
    let err = ((res_k - res_g) * half).abs();
    (value, err, res_abs * half.abs())
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over the intervals delimited by
/// `breaks`. The estimate is refined until the total error is below
/// `max(abs_tol, rel_tol * ∫|f|)` or `max_segments` is reached.
pub fn integrate_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> QuadResult {
    let mut heap = BinaryHeap::new();
    for pair in breaks.windows(2) {
        if pair[1] > pair[0] {
            let (value, error, abs_value) = gk15(&f, pair[0], pair[1]);
            heap.push(Segment { a: pair[0], b: pair[1], value, error, abs_value });
        }
    }
    loop {
        let (error, abs_value) = heap
            .iter()
            .fold((0.0, 0.0), |acc, s| (acc.0 + s.error, acc.1 + s.abs_value));
        let tol = abs_tol.max(rel_tol * abs_value);
        if error <= tol || heap.len() >= max_segments {
            // Sum in interval order so the result does not depend on heap layout.
            let mut segs = heap.into_vec();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = segs.iter().map(|s| s.value).sum::<f64>();
            return QuadResult { value, error, abs_value };
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error, abs_value) = gk15(&f, lo, hi);
            heap.push(Segment { a: lo, b: hi, value, error, abs_value });
        }
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> QuadResult {
    integrate_breaks(f, &[a, b], 0.0, rel_tol, 4000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 10, 16] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((r.value - 2.0).abs() < 1e-9, "{:?}", r);
    }

    #[test]
    fn adaptive_smooth_integrand() {
        let r = integrate(f64::exp, 0.0, 3.0, 1e-14);
        assert!((r.value - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}

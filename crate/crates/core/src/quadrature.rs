//! One-dimensional quadrature rules.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on the given panel breakpoints.
pub fn composite_gauss(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let mut out = Vec::with_capacity(order * breaks.len().saturating_sub(1));
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + half * xi, half * wi));
        }
    }
    out
}

pub fn integrate_gauss(f: impl Fn(f64) -> f64, breaks: &[f64], order: usize) -> f64 {
    composite_gauss(breaks, order).into_iter().map(|(x, w)| w * f(x)).sum()
}

/// Integral over `[a, b]` of the piecewise-linear interpolant of the samples
/// `(times[i], values[i])`. Requires `times` strictly increasing and
/// `times[0] <= a <= b <= times[last]`.
pub fn trapezoid_clipped(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    let interp = |t: f64, i: usize| {
        let (t0, t1) = (times[i], times[i + 1]);
        let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        values[i] + s * (values[i + 1] - values[i])
    };
    let mut total = 0.0;
    for i in 0..times.len().saturating_sub(1) {
        let lo = times[i].max(a);
        let hi = times[i + 1].min(b);
        if hi <= lo {
            continue;
        }
        total += 0.5 * (hi - lo) * (interp(lo, i) + interp(hi, i));
    }
    total
}

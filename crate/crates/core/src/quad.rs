//! Gauss–Legendre quadrature rules.

use crate::scalar::{lit, Scalar};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre<S: Scalar>(n: usize) -> Vec<(S, S)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    let nf = lit::<S>(n as f64);
    for i in 0..n {
        // Tricomi initial guess
        let mut x = (S::PI() * (lit::<S>(i as f64) + lit::<S>(0.75)) / (nf + lit::<S>(0.5))).cos();
        let mut dp = S::zero();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative::<S>(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= S::epsilon() * lit::<S>(4.0) {
                break;
            }
        }
        let w = lit::<S>(2.0) / ((S::one() - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.reverse(); // ascending nodes
    rule
}

/// Composite rule on [a, b]: `panels` equal panels, `order`-point GL each.
pub fn composite_gauss<S: Scalar>(a: S, b: S, panels: usize, order: usize) -> Vec<(S, S)> {
    let base = gauss_legendre::<S>(order);
    let h = (b - a) / lit::<S>(panels as f64);
    let half = h / lit::<S>(2.0);
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + h * lit::<S>(p as f64) + half;
        for &(x, w) in &base {
            out.push((mid + half * x, half * w));
        }
    }
    out
}

fn legendre_with_derivative<S: Scalar>(n: usize, x: S) -> (S, S) {
    let mut p0 = S::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = lit::<S>(k as f64);
        let p2 = ((lit::<S>(2.0) * kf - S::one()) * x * p1 - (kf - S::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = lit::<S>(n as f64) * (x * p1 - p0) / (x * x - S::one());
    (p1, d)
}

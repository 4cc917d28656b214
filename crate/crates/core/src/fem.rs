//! Element kernels on axis-aligned trilinear hexahedra.
//!
//! The grid is uniform, so every element shares one geometry: stiffness and
//! mass matrices are computed once per material and scattered everywhere.
//! Cubic Hermite segments along x₃ (for the bending unknowns) are provided
//! alongside.

use crate::material::LameCoefficients;

/// Local corner offsets matching `StructuredGrid::element_nodes` ordering.
pub const CORNER_OFFSETS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const GAUSS_1D: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// One tensor-product Gauss point of the 2×2×2 rule.
#[derive(Debug, Clone, Copy)]
pub struct GaussPoint {
    /// Physical quadrature weight (includes the Jacobian).
    pub weight: f64,
    /// Trilinear shape values at the point.
    pub shape: [f64; 8],
    /// Physical gradients ∂N_a/∂x_i.
    pub grad: [[f64; 3]; 8],
    /// Offset of the point from the element's low corner, in physical units.
    pub local: [f64; 3],
}

/// Shape values and reference gradients at ξ ∈ [−1,1]³.
pub fn shape_trilinear(xi: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let mut n = [0.0; 8];
    let mut d = [[0.0; 3]; 8];
    for (a, off) in CORNER_OFFSETS.iter().enumerate() {
        let s = [
            2.0 * off[0] as f64 - 1.0,
            2.0 * off[1] as f64 - 1.0,
            2.0 * off[2] as f64 - 1.0,
        ];
        let f = [
            0.5 * (1.0 + s[0] * xi[0]),
            0.5 * (1.0 + s[1] * xi[1]),
            0.5 * (1.0 + s[2] * xi[2]),
        ];
        n[a] = f[0] * f[1] * f[2];
        d[a] = [
            0.5 * s[0] * f[1] * f[2],
            f[0] * 0.5 * s[1] * f[2],
            f[0] * f[1] * 0.5 * s[2],
        ];
    }
    (n, d)
}

/// The 2×2×2 Gauss rule on an element with spacings h.
pub fn gauss_points(h: [f64; 3]) -> Vec<GaussPoint> {
    let det = h[0] * h[1] * h[2] / 8.0;
    let mut pts = Vec::with_capacity(8);
    for &gx in &GAUSS_1D {
        for &gy in &GAUSS_1D {
            for &gz in &GAUSS_1D {
                let xi = [gx, gy, gz];
                let (shape, dref) = shape_trilinear(xi);
                let mut grad = [[0.0; 3]; 8];
                for a in 0..8 {
                    for i in 0..3 {
                        grad[a][i] = dref[a][i] * 2.0 / h[i];
                    }
                }
                let local = [
                    (xi[0] + 1.0) * 0.5 * h[0],
                    (xi[1] + 1.0) * 0.5 * h[1],
                    (xi[2] + 1.0) * 0.5 * h[2],
                ];
                pts.push(GaussPoint { weight: det, shape, grad, local });
            }
        }
    }
    pts
}

/// 24×24 element matrix of the quadratic form ∫ λ(div u)² + 2μ e(u):e(u),
/// row/column layout 3a + i for node a, component i.
pub fn elastic_ke(h: [f64; 3], material: &LameCoefficients<f64>) -> Vec<f64> {
    let (lambda, mu) = (material.lambda, material.mu);
    let mut ke = vec![0.0; 24 * 24];
    for gp in gauss_points(h) {
        for a in 0..8 {
            for b in 0..8 {
                let ga = gp.grad[a];
                let gb = gp.grad[b];
                let dot: f64 = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
                for i in 0..3 {
                    for j in 0..3 {
                        let mut v = lambda * ga[i] * gb[j] + mu * ga[j] * gb[i];
                        if i == j {
                            v += mu * dot;
                        }
                        ke[(3 * a + i) * 24 + (3 * b + j)] += gp.weight * v;
                    }
                }
            }
        }
    }
    ke
}

/// 8×8 scalar mass matrix ∫ N_a N_b.
pub fn mass_me(h: [f64; 3]) -> [[f64; 8]; 8] {
    let mut me = [[0.0; 8]; 8];
    for gp in gauss_points(h) {
        for a in 0..8 {
            for b in 0..8 {
                me[a][b] += gp.weight * gp.shape[a] * gp.shape[b];
            }
        }
    }
    me
}

/// 8×8 axial-gradient matrix ∫ ∂₃N_a ∂₃N_b.
pub fn d33_ke(h: [f64; 3]) -> [[f64; 8]; 8] {
    let mut ke = [[0.0; 8]; 8];
    for gp in gauss_points(h) {
        for a in 0..8 {
            for b in 0..8 {
                ke[a][b] += gp.weight * gp.grad[a][2] * gp.grad[b][2];
            }
        }
    }
    ke
}

/// Cubic Hermite basis on a segment of length `h` at local coordinate
/// t ∈ [0, 1]; dof order (value₀, slope₀, value₁, slope₁). Returns
/// (values, d/dx, d²/dx²).
pub fn hermite_eval(t: f64, h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let value = [
        1.0 - 3.0 * t2 + 2.0 * t3,
        h * (t - 2.0 * t2 + t3),
        3.0 * t2 - 2.0 * t3,
        h * (t3 - t2),
    ];
    let d1 = [
        (-6.0 * t + 6.0 * t2) / h,
        1.0 - 4.0 * t + 3.0 * t2,
        (6.0 * t - 6.0 * t2) / h,
        3.0 * t2 - 2.0 * t,
    ];
    let d2 = [
        (-6.0 + 12.0 * t) / (h * h),
        (-4.0 + 6.0 * t) / h,
        (6.0 - 12.0 * t) / (h * h),
        (6.0 * t - 2.0) / h,
    ];
    (value, d1, d2)
}

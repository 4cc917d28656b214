//! Exact plane exterior cell solutions and their singular-energy quadrature.
//!
//! Around a single fiber the local perturbation is described, in rescaled
//! coordinates y = (x − center)/r, by three exterior fields on R² ∖ D
//! (D the open unit disk):
//!
//! - two plane-elasticity fields w¹, w² vanishing on the unit circle and
//!   growing like −ln|y| in their own direction,
//! - the harmonic field w(y) = −ln|y| for the longitudinal direction.
//!
//! With κ = (λ+3μ)/(λ+μ) and ρ = |y|, the vector fields are
//!
//! ```text
//! w¹₁ = −ln ρ + (y₁²−y₂²)/(2κρ²) − (y₁²−y₂²)/(2κρ⁴)
//! w¹₂ = y₁y₂/(κρ²) − y₁y₂/(κρ⁴)
//! w²(y₁,y₂) = swap ∘ w¹(y₂,y₁)
//! ```
//!
//! These come from the Kolosov–Muskhelishvili potentials φ(z) = −(μ/κ) ln z,
//! ψ(z) = μ ln z + (μ/κ) z⁻² of the exterior point-force problem; in complex form
//! u₁ + iu₂ = −ln ρ + (1/(2κ))(1 − ρ⁻²)e^{2iθ}. Both quadratic terms of w¹₁
//! vanish on ρ = 1, the off-component is bounded, and σ(w¹) is
//! divergence-free (checked against a finite-difference oracle in the tests).
//! The |y|⁻⁴ term of w²₁ carries the same 1/κ factor as w¹₂ so that the
//! axis-exchange symmetry and the boundary condition w²|S₁ = 0 hold.
//!
//! Their logarithmically scaled annulus energies converge to
//! 2πμ(1+κ)/κ·δ_lm (vector fields) and 2π (harmonic field); the truncated
//! correctors z_ε^m built from these fields have total energy
//! 2πγμ(1+κ)/κ·|Ω|·δ_lm resp. 2πγμ|Ω|. Quadrature is tensor-product
//! Gauss–Legendre in (ln ρ, θ), which integrates the logarithmically
//! dominant part to quadrature order.

use crate::error::{Error, Result};
use crate::material::LameCoefficients;
use crate::quad::{composite_gauss, gauss_legendre};
use crate::scalar::{lit, Scalar};

/// The three exterior cell fields; the index m of w^m, with 3 denoting the
/// scalar harmonic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellField {
    W1,
    W2,
    WLog,
}

impl CellField {
    pub fn from_index(m: usize) -> Result<Self> {
        match m {
            1 => Ok(CellField::W1),
            2 => Ok(CellField::W2),
            3 => Ok(CellField::WLog),
            _ => Err(Error::InvalidArgument(format!("cell field index must be 1..=3, got {m}"))),
        }
    }

    pub fn index(&self) -> usize {
        match self {
            CellField::W1 => 1,
            CellField::W2 => 2,
            CellField::WLog => 3,
        }
    }
}

fn check_exterior<S: Scalar>(y: [S; 2], strict: bool) -> Result<()> {
    let rho2 = y[0] * y[0] + y[1] * y[1];
    let tol = lit::<S>(1e-12);
    let inside = if strict {
        rho2 <= S::one() + tol
    } else {
        rho2 < S::one() - tol
    };
    if inside {
        return Err(Error::Domain(format!(
            "cell fields are defined on |y| >= 1, got |y| = {}",
            rho2.sqrt()
        )));
    }
    Ok(())
}

/// w^m(y) for m ∈ {1, 2}; requires |y| ≥ 1.
pub fn eval_w_vector<S: Scalar>(field: CellField, kappa: S, y: [S; 2]) -> Result<[S; 2]> {
    check_exterior(y, false)?;
    Ok(match field {
        CellField::W1 => w1_raw(kappa, y),
        CellField::W2 => {
            let v = w1_raw(kappa, [y[1], y[0]]);
            [v[1], v[0]]
        }
        CellField::WLog => {
            return Err(Error::InvalidArgument("eval_w_vector expects W1 or W2".into()))
        }
    })
}

/// w(y) = −ln|y|; requires |y| ≥ 1.
pub fn eval_w_log<S: Scalar>(y: [S; 2]) -> Result<S> {
    check_exterior(y, false)?;
    let rho2 = y[0] * y[0] + y[1] * y[1];
    Ok(-rho2.ln() / lit::<S>(2.0))
}

/// ∂w^m_i/∂y_j as rows i, columns j.
pub fn grad_w_vector<S: Scalar>(field: CellField, kappa: S, y: [S; 2]) -> Result<[[S; 2]; 2]> {
    check_exterior(y, false)?;
    Ok(match field {
        CellField::W1 => grad_w1_raw(kappa, y),
        CellField::W2 => {
            // w²_i(y₁,y₂) = w¹_{s(i)}(y₂,y₁) with s the index swap
            let g = grad_w1_raw(kappa, [y[1], y[0]]);
            [[g[1][1], g[1][0]], [g[0][1], g[0][0]]]
        }
        CellField::WLog => {
            return Err(Error::InvalidArgument("grad_w_vector expects W1 or W2".into()))
        }
    })
}

/// ∇w = (−y₁/ρ², −y₂/ρ²).
pub fn grad_w_log<S: Scalar>(y: [S; 2]) -> Result<[S; 2]> {
    check_exterior(y, false)?;
    let rho2 = y[0] * y[0] + y[1] * y[1];
    Ok([-y[0] / rho2, -y[1] / rho2])
}

fn w1_raw<S: Scalar>(kappa: S, y: [S; 2]) -> [S; 2] {
    let rho2 = y[0] * y[0] + y[1] * y[1];
    let g = rho2.recip() - (rho2 * rho2).recip();
    let q = y[0] * y[0] - y[1] * y[1];
    let p = y[0] * y[1];
    let half = lit::<S>(0.5);
    [-rho2.ln() * half + q * g / (lit::<S>(2.0) * kappa), p * g / kappa]
}

fn grad_w1_raw<S: Scalar>(kappa: S, y: [S; 2]) -> [[S; 2]; 2] {
    let rho2 = y[0] * y[0] + y[1] * y[1];
    let inv2 = rho2.recip();
    let inv4 = inv2 * inv2;
    let inv6 = inv4 * inv2;
    let g = inv2 - inv4;
    // dg/dy_i = h·y_i
    let h = lit::<S>(4.0) * inv6 - lit::<S>(2.0) * inv4;
    let q = y[0] * y[0] - y[1] * y[1];
    let p = y[0] * y[1];
    let two = lit::<S>(2.0);
    let d11 = -y[0] * inv2 + (q * h * y[0] + two * y[0] * g) / (two * kappa);
    let d12 = -y[1] * inv2 + (q * h * y[1] - two * y[1] * g) / (two * kappa);
    let d21 = (y[1] * g + p * h * y[0]) / kappa;
    let d22 = (y[0] * g + p * h * y[1]) / kappa;
    [[d11, d12], [d21, d22]]
}

/// Plane stress tensor of w^m (m ∈ {1,2}) under the isotropic law
/// σ = λ tr(e) I + 2μ e; divergence-free away from S₁. Requires |y| > 1.
pub fn eval_stress<S: Scalar>(
    field: CellField,
    y: [S; 2],
    base: &LameCoefficients<S>,
) -> Result<[[S; 2]; 2]> {
    check_exterior(y, true)?;
    let kappa = base.kappa();
    let grad = grad_w_vector(field, kappa, y)?;
    let e11 = grad[0][0];
    let e22 = grad[1][1];
    let e12 = (grad[0][1] + grad[1][0]) / lit::<S>(2.0);
    let tr = e11 + e22;
    let two_mu = lit::<S>(2.0) * base.mu;
    Ok([
        [base.lambda * tr + two_mu * e11, two_mu * e12],
        [two_mu * e12, base.lambda * tr + two_mu * e22],
    ])
}

/// σ(w^m) : e(w^l) for plane indices m, l ∈ {1, 2}.
fn plane_energy_density<S: Scalar>(m: CellField, l: CellField, kappa: S, base: &LameCoefficients<S>, y: [S; 2]) -> S {
    let gm = match m {
        CellField::W1 => grad_w1_raw(kappa, y),
        CellField::W2 => swap_grad(grad_w1_raw(kappa, [y[1], y[0]])),
        CellField::WLog => unreachable!(),
    };
    let gl = match l {
        CellField::W1 => grad_w1_raw(kappa, y),
        CellField::W2 => swap_grad(grad_w1_raw(kappa, [y[1], y[0]])),
        CellField::WLog => unreachable!(),
    };
    let half = lit::<S>(0.5);
    let (em11, em22, em12) = (gm[0][0], gm[1][1], (gm[0][1] + gm[1][0]) * half);
    let (el11, el22, el12) = (gl[0][0], gl[1][1], (gl[0][1] + gl[1][0]) * half);
    let trm = em11 + em22;
    let trl = el11 + el22;
    base.lambda * trm * trl
        + lit::<S>(2.0) * base.mu * (em11 * el11 + em22 * el22 + lit::<S>(2.0) * em12 * el12)
}

fn swap_grad<S: Scalar>(g: [[S; 2]; 2]) -> [[S; 2]; 2] {
    [[g[1][1], g[1][0]], [g[0][1], g[0][0]]]
}

/// Relative tolerance for the quadrature-doubling self check.
const QUAD_SELF_CHECK_TOL: f64 = 1e-7;

/// (1/ln R) ∫_{D(1,R)} σ_ij(w^m) e_ij(w^l) dy for m, l ∈ {1, 2},
/// (1/ln R) ∫ |∇w|² dy for m = l = 3, and exactly 0 for the mixed pairs
/// (the cross energy density of an in-plane field with the anti-plane field
/// vanishes pointwise).
///
/// `n_r` is the number of composite panels in t = ln ρ, `n_theta` the
/// Gauss–Legendre order in the angle. The value is accepted only if doubling
/// both counts moves it by less than a declared relative tolerance.
pub fn annulus_energy<S: Scalar>(
    m: usize,
    l: usize,
    r_outer: S,
    base: &LameCoefficients<S>,
    n_r: usize,
    n_theta: usize,
) -> Result<S> {
    let fm = CellField::from_index(m)?;
    let fl = CellField::from_index(l)?;
    if !(r_outer > S::one()) {
        return Err(Error::InvalidArgument(format!("annulus_energy requires R > 1, got {r_outer}")));
    }
    if (fm == CellField::WLog) != (fl == CellField::WLog) {
        return Ok(S::zero());
    }
    let coarse = annulus_energy_raw(fm, fl, r_outer, base, n_r, n_theta);
    let fine = annulus_energy_raw(fm, fl, r_outer, base, 2 * n_r, 2 * n_theta);
    let tol = lit::<S>(QUAD_SELF_CHECK_TOL) * fine.abs().max(S::one());
    if (fine - coarse).abs() > tol {
        return Err(Error::QuadratureAccuracy(format!(
            "annulus_energy({m},{l},R={r_outer}) moved from {coarse} to {fine} under doubling"
        )));
    }
    Ok(fine)
}

fn annulus_energy_raw<S: Scalar>(
    fm: CellField,
    fl: CellField,
    r_outer: S,
    base: &LameCoefficients<S>,
    n_r: usize,
    n_theta: usize,
) -> S {
    let kappa = base.kappa();
    let t_max = r_outer.ln();
    let t_rule = composite_gauss(S::zero(), t_max, n_r, 4);
    let theta_rule: Vec<(S, S)> = gauss_legendre::<S>(n_theta)
        .into_iter()
        .map(|(x, w)| (S::PI() * (x + S::one()), S::PI() * w))
        .collect();
    let mut total = S::zero();
    for &(t, wt) in &t_rule {
        let rho = t.exp();
        let jac = rho * rho;
        let mut ring = S::zero();
        for &(theta, wq) in &theta_rule {
            let y = [rho * theta.cos(), rho * theta.sin()];
            let density = if fm == CellField::WLog {
                // |∇w|² = 1/ρ²
                (y[0] * y[0] + y[1] * y[1]).recip()
            } else {
                plane_energy_density(fm, fl, kappa, base, y)
            };
            ring += wq * density;
        }
        total += wt * jac * ring;
    }
    total / t_max
}

/// Least-squares fit of value(R) = a + b/ln R; returns (a, b).
pub fn fit_log_limit<S: Scalar>(radii: &[S], values: &[S]) -> Result<(S, S)> {
    if radii.len() != values.len() || radii.len() < 2 {
        return Err(Error::InvalidArgument(
            "fit_log_limit needs at least two (R, value) pairs".into(),
        ));
    }
    let n = lit::<S>(radii.len() as f64);
    let xs: Vec<S> = radii.iter().map(|&r| r.ln().recip()).collect();
    let sx = xs.iter().fold(S::zero(), |a, &x| a + x);
    let sy = values.iter().fold(S::zero(), |a, &v| a + v);
    let sxx = xs.iter().fold(S::zero(), |a, &x| a + x * x);
    let sxy = xs.iter().zip(values).fold(S::zero(), |a, (&x, &v)| a + x * v);
    let det = n * sxx - sx * sx;
    if det.abs() <= S::epsilon() {
        return Err(Error::InvalidArgument("fit_log_limit: degenerate abscissae".into()));
    }
    let b = (n * sxy - sx * sy) / det;
    let a = (sy - b * sx) / n;
    Ok((a, b))
}

/// The C¹ truncation profile: 1 for R ≤ s/2, 0 for R ≥ s, and
/// −4/(3s²)·(R² − s²) in between.
pub fn truncation_phi<S: Scalar>(radius: S, s: S) -> S {
    let half = s / lit::<S>(2.0);
    if radius <= half {
        S::one()
    } else if radius >= s {
        S::zero()
    } else {
        -lit::<S>(4.0) / (lit::<S>(3.0) * s * s) * (radius * radius - s * s)
    }
}

fn truncation_phi_prime<S: Scalar>(radius: S, s: S) -> S {
    let half = s / lit::<S>(2.0);
    if radius <= half || radius >= s {
        S::zero()
    } else {
        -lit::<S>(8.0) * radius / (lit::<S>(3.0) * s * s)
    }
}

/// One fiber cell: center of the disk in the cross-section, fiber radius r
/// and truncation radius s, with 0 < r < s ≤ ε/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberCell<S> {
    pub center: [S; 2],
    pub r: S,
    pub s: S,
}

impl<S: Scalar> FiberCell<S> {
    pub fn new(center: [S; 2], r: S, s: S) -> Result<Self> {
        if !(r > S::zero() && r < s) {
            return Err(Error::InvalidArgument(format!(
                "fiber cell requires 0 < r < s, got r = {r}, s = {s}"
            )));
        }
        Ok(Self { center, r, s })
    }

    fn radius_to(&self, x: [S; 2]) -> S {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        (dx * dx + dy * dy).sqrt()
    }
}

/// Default truncation radius s_ε = exp(−ε^{−1/2}), clamped to [2r, ε/2].
pub fn default_truncation_radius<S: Scalar>(eps: S, r: S) -> S {
    let raw = (-eps.powf(lit::<S>(-0.5))).exp();
    raw.max(lit::<S>(2.0) * r).min(eps / lit::<S>(2.0))
}

/// The log-scaled single-fiber field w_ε^{mk}(x) = w^m((x − c)/r)/ln r as a
/// 3-vector (third component for m = 3); rises from 0 on the fiber surface
/// towards e_m.
pub fn scaled_cell_field<S: Scalar>(
    m: usize,
    cell: &FiberCell<S>,
    kappa: S,
    x: [S; 2],
) -> Result<[S; 3]> {
    let field = CellField::from_index(m)?;
    let y = [(x[0] - cell.center[0]) / cell.r, (x[1] - cell.center[1]) / cell.r];
    let inv_log = cell.r.ln().recip();
    Ok(match field {
        CellField::WLog => [S::zero(), S::zero(), eval_w_log(y)? * inv_log],
        _ => {
            let v = eval_w_vector(field, kappa, y)?;
            [v[0] * inv_log, v[1] * inv_log, S::zero()]
        }
    })
}

/// The corrector z_ε^m at a cross-section point: e_m on the fiber,
/// φ·(e_m − w_ε^{mk}) on the annulus r ≤ R ≤ s, zero outside every cell.
pub fn corrector_z<S: Scalar>(
    m: usize,
    cells: &[FiberCell<S>],
    kappa: S,
    x: [S; 2],
) -> Result<[S; 3]> {
    CellField::from_index(m)?;
    for cell in cells {
        let radius = cell.radius_to(x);
        if radius >= cell.s {
            continue;
        }
        let mut e_m = [S::zero(); 3];
        e_m[m - 1] = S::one();
        if radius <= cell.r {
            return Ok(e_m);
        }
        let phi = truncation_phi(radius, cell.s);
        let w = scaled_cell_field(m, cell, kappa, x)?;
        return Ok([
            phi * (e_m[0] - w[0]),
            phi * (e_m[1] - w[1]),
            phi * (e_m[2] - w[2]),
        ]);
    }
    Ok([S::zero(); 3])
}

/// In-plane gradient ∂z_i/∂x_j (i = 1..3 rows, j = 1..2 columns) on the
/// annulus r < R < s of one cell.
fn corrector_grad<S: Scalar>(m: usize, cell: &FiberCell<S>, kappa: S, x: [S; 2]) -> Result<[[S; 2]; 3]> {
    let field = CellField::from_index(m)?;
    let radius = cell.radius_to(x);
    let n = [(x[0] - cell.center[0]) / radius, (x[1] - cell.center[1]) / radius];
    let y = [(x[0] - cell.center[0]) / cell.r, (x[1] - cell.center[1]) / cell.r];
    let phi = truncation_phi(radius, cell.s);
    let dphi = truncation_phi_prime(radius, cell.s);
    let inv_log = cell.r.ln().recip();
    let chain = inv_log / cell.r;

    let mut e_m = [S::zero(); 3];
    e_m[m - 1] = S::one();
    let (w, grad_w): ([S; 3], [[S; 2]; 3]) = match field {
        CellField::WLog => {
            let v = eval_w_log(y)? * inv_log;
            let g = grad_w_log(y)?;
            (
                [S::zero(), S::zero(), v],
                [[S::zero(); 2], [S::zero(); 2], [g[0] * chain, g[1] * chain]],
            )
        }
        _ => {
            let v = eval_w_vector(field, kappa, y)?;
            let g = grad_w_vector(field, kappa, y)?;
            (
                [v[0] * inv_log, v[1] * inv_log, S::zero()],
                [
                    [g[0][0] * chain, g[0][1] * chain],
                    [g[1][0] * chain, g[1][1] * chain],
                    [S::zero(); 2],
                ],
            )
        }
    };
    let mut out = [[S::zero(); 2]; 3];
    for i in 0..3 {
        for j in 0..2 {
            out[i][j] = (e_m[i] - w[i]) * dphi * n[j] - phi * grad_w[i][j];
        }
    }
    Ok(out)
}

/// 3D energy density σ(z^m) : e(z^l) from two in-plane gradients.
fn corrector_energy_density<S: Scalar>(gm: &[[S; 2]; 3], gl: &[[S; 2]; 3], base: &LameCoefficients<S>) -> S {
    let half = lit::<S>(0.5);
    let strain = |g: &[[S; 2]; 3]| {
        let e11 = g[0][0];
        let e22 = g[1][1];
        let e12 = (g[0][1] + g[1][0]) * half;
        let e13 = g[2][0] * half;
        let e23 = g[2][1] * half;
        (e11, e22, e12, e13, e23)
    };
    let (a11, a22, a12, a13, a23) = strain(gm);
    let (b11, b22, b12, b13, b23) = strain(gl);
    let tra = a11 + a22;
    let trb = b11 + b22;
    let two = lit::<S>(2.0);
    base.lambda * tra * trb
        + two * base.mu * (a11 * b11 + a22 * b22 + two * (a12 * b12 + a13 * b13 + a23 * b23))
}

/// Lemma-limit of the corrector energies: 2πγμ(1+κ)/κ·volume·δ_lm for
/// m, l ∈ {1, 2}, zero for mixed pairs, 2πγμ·volume for m = l = 3.
pub fn predicted_corrector_energy<S: Scalar>(
    m: usize,
    l: usize,
    gamma: S,
    base: &LameCoefficients<S>,
    volume: S,
) -> Result<S> {
    let fm = CellField::from_index(m)?;
    let fl = CellField::from_index(l)?;
    if fm != fl {
        return Ok(S::zero());
    }
    let two_pi = lit::<S>(2.0) * S::PI();
    Ok(match fm {
        CellField::WLog => two_pi * gamma * base.mu * volume,
        _ => {
            let kappa = base.kappa();
            two_pi * gamma * base.mu * (S::one() + kappa) / kappa * volume
        }
    })
}

/// ∫_Ω σ(z_ε^m) : e(z_ε^l) dx by per-fiber polar quadrature over the
/// annuli r < R < s, multiplied by the cylinder length. The t = ln R range
/// is split at ln(s/2) so the truncation kink sits on a panel boundary.
pub fn corrector_energy_numeric<S: Scalar>(
    m: usize,
    l: usize,
    cells: &[FiberCell<S>],
    base: &LameCoefficients<S>,
    length: S,
    n_r: usize,
    n_theta: usize,
) -> Result<S> {
    CellField::from_index(m)?;
    CellField::from_index(l)?;
    if cells.is_empty() {
        return Err(Error::EmptyLayout("corrector_energy_numeric needs at least one fiber".into()));
    }
    let coarse = corrector_energy_raw(m, l, cells, base, length, n_r, n_theta)?;
    let fine = corrector_energy_raw(m, l, cells, base, length, 2 * n_r, 2 * n_theta)?;
    let tol = lit::<S>(QUAD_SELF_CHECK_TOL) * fine.abs().max(S::one());
    if (fine - coarse).abs() > tol {
        return Err(Error::QuadratureAccuracy(format!(
            "corrector_energy({m},{l}) moved from {coarse} to {fine} under doubling"
        )));
    }
    Ok(fine)
}

fn corrector_energy_raw<S: Scalar>(
    m: usize,
    l: usize,
    cells: &[FiberCell<S>],
    base: &LameCoefficients<S>,
    length: S,
    n_r: usize,
    n_theta: usize,
) -> Result<S> {
    let kappa = base.kappa();
    let theta_rule: Vec<(S, S)> = gauss_legendre::<S>(n_theta)
        .into_iter()
        .map(|(x, w)| (S::PI() * (x + S::one()), S::PI() * w))
        .collect();
    let mut total = S::zero();
    for cell in cells {
        let t0 = cell.r.ln();
        let t_knee = (cell.s / lit::<S>(2.0)).ln();
        let t1 = cell.s.ln();
        let outer_panels = (n_r / 8).max(8);
        // when r >= s/2 the truncation kink lies inside the fiber and the
        // whole annulus is a single smooth range
        let t_rule = if t_knee > t0 {
            let mut rule = composite_gauss(t0, t_knee, n_r, 4);
            rule.extend(composite_gauss(t_knee, t1, outer_panels, 4));
            rule
        } else {
            composite_gauss(t0, t1, n_r, 4)
        };
        for &(t, wt) in &t_rule {
            let radius = t.exp();
            let jac = radius * radius;
            let mut ring = S::zero();
            for &(theta, wq) in &theta_rule {
                let x = [
                    cell.center[0] + radius * theta.cos(),
                    cell.center[1] + radius * theta.sin(),
                ];
                let gm = corrector_grad(m, cell, kappa, x)?;
                let gl = if l == m { gm } else { corrector_grad(l, cell, kappa, x)? };
                ring += wq * corrector_energy_density(&gm, &gl, base);
            }
            total += wt * jac * ring;
        }
    }
    Ok(total * length)
}

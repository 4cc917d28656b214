//! Constants of the homogenized laws and classification of scaling families.
//!
//! The effective model of a fiber-reinforced cylinder is governed by a handful
//! of scalars derived from the Lamé pair (λ, μ) of the matrix and the scaling
//! of the fiber radius r_ε and fiber Lamé pair (λ^ε, μ^ε):
//!
//! - κ = (λ + 3μ)/(λ + μ), always in (1, 3],
//! - the coupling matrix A = diag(μ(1+κ)/κ, μ(1+κ)/κ, μ),
//! - γ = lim −1/(ε² ln r_ε),
//! - λ_o = lim λ^ε r_ε²/ε²,  μ_o = lim μ^ε r_ε²/ε²  and the effective Young
//!   modulus E_o = μ_o(3λ_o + 2μ_o)/(λ_o + μ_o),
//! - the bending-dominated scaling λ₁ = lim λ^ε r_ε⁴/ε², μ₁ = lim μ^ε r_ε⁴/ε²
//!   with E₁ = μ₁(3λ₁ + 2μ₁)/(λ₁ + μ₁),
//! - transverse (torus) variants γ* = lim −1/(ε ln r_ε) and
//!   λ_o* = lim λ^ε r_ε²/ε, μ_o* = lim μ^ε r_ε²/ε.
//!
//! All quantities are nondimensional; the caller declares consistent scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Isotropic Lamé pair of a linear elastic material, μ > 0 and λ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameCoefficients<S> {
    pub lambda: S,
    pub mu: S,
}

impl<S: Scalar> LameCoefficients<S> {
    pub fn new(lambda: S, mu: S) -> Result<Self> {
        if !(mu > S::zero()) || !(lambda >= S::zero()) {
            return Err(Error::InvalidMaterial(format!(
                "need mu > 0 and lambda >= 0, got lambda = {lambda}, mu = {mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    /// κ = (λ + 3μ)/(λ + μ); strictly decreasing in λ/μ, κ(0, μ) = 3, κ → 1 as λ → ∞.
    pub fn kappa(&self) -> S {
        (self.lambda + lit::<S>(3.0) * self.mu) / (self.lambda + self.mu)
    }

    /// Diagonal of the coupling matrix A = diag(μ(1+κ)/κ, μ(1+κ)/κ, μ).
    pub fn coupling_matrix(&self) -> [S; 3] {
        let k = self.kappa();
        let a_plane = self.mu * (S::one() + k) / k;
        [a_plane, a_plane, self.mu]
    }
}

/// E(λ', μ') = μ'(3λ' + 2μ')/(λ' + μ'), the uniaxial stiffness of an
/// isotropic material with Lamé pair (λ', μ').
pub fn young_effective<S: Scalar>(lambda_o: S, mu_o: S) -> Result<S> {
    if !(mu_o > S::zero()) {
        return Err(Error::InvalidArgument(format!(
            "young_effective requires mu_o > 0, got {mu_o}"
        )));
    }
    if lambda_o < S::zero() {
        return Err(Error::InvalidArgument(format!(
            "young_effective requires lambda_o >= 0, got {lambda_o}"
        )));
    }
    Ok(mu_o * (lit::<S>(3.0) * lambda_o + lit::<S>(2.0) * mu_o) / (lambda_o + mu_o))
}

/// Young modulus of the flexion regime, E₁ = μ₁(3λ₁ + 2μ₁)/(λ₁ + μ₁).
pub fn flexion_young<S: Scalar>(lambda_1: S, mu_1: S) -> Result<S> {
    young_effective(lambda_1, mu_1)
}

/// Finite-ε value of the longitudinal capacity scaling, −1/(ε² ln r).
pub fn gamma_of<S: Scalar>(eps: S, r: S) -> Result<S> {
    if !(eps > S::zero()) {
        return Err(Error::InvalidArgument(format!("gamma_of requires eps > 0, got {eps}")));
    }
    if !(r > S::zero() && r < S::one()) {
        return Err(Error::InvalidArgument(format!(
            "gamma_of requires 0 < r < 1 (log sign), got {r}"
        )));
    }
    Ok(-(eps * eps * r.ln()).recip())
}

/// Per-ε transverse (torus) coefficients of a scaling family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseCoefficients<S> {
    /// γ* = −1/(ε ln r)
    pub gamma_star: S,
    /// λ_o* = λ^ε r²/ε
    pub lambda_o_star: S,
    /// μ_o* = μ^ε r²/ε
    pub mu_o_star: S,
    /// E_o* = μ_o*(3λ_o* + 2μ_o*)/(λ_o* + μ_o*), zero when μ_o* = 0
    pub e_o_star: S,
}

/// Evaluates the transverse-fiber scalings at a single ε.
pub fn transverse_coefficients<S: Scalar>(
    eps: S,
    r: S,
    lame_eps: &LameCoefficients<S>,
) -> Result<TransverseCoefficients<S>> {
    if !(eps > S::zero()) {
        return Err(Error::InvalidArgument(format!("requires eps > 0, got {eps}")));
    }
    if !(r > S::zero() && r < S::one()) {
        return Err(Error::InvalidArgument(format!("requires 0 < r < 1, got {r}")));
    }
    let gamma_star = -(eps * r.ln()).recip();
    let scale = r * r / eps;
    let lambda_o_star = lame_eps.lambda * scale;
    let mu_o_star = lame_eps.mu * scale;
    let e_o_star = if mu_o_star > S::zero() {
        young_effective(lambda_o_star, mu_o_star)?
    } else {
        S::zero()
    };
    Ok(TransverseCoefficients { gamma_star, lambda_o_star, mu_o_star, e_o_star })
}

/// The homogenized law's constants, flattened for scenario configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients<S> {
    pub gamma: S,
    pub kappa: S,
    #[serde(rename = "A11")]
    pub a11: S,
    #[serde(rename = "A33")]
    pub a33: S,
    #[serde(rename = "E_o")]
    pub e_o: S,
    #[serde(rename = "E_1")]
    pub e_1: S,
    pub gamma_star: S,
    #[serde(rename = "E_o_star")]
    pub e_o_star: S,
}

impl<S: Scalar> EffectiveCoefficients<S> {
    /// Builds the constant set for a critical-regime model: base matrix
    /// material plus the fiber limits (γ, λ_o, μ_o).
    pub fn critical(base: &LameCoefficients<S>, gamma: S, lambda_o: S, mu_o: S) -> Result<Self> {
        let [a11, _, a33] = base.coupling_matrix();
        let e_o = if mu_o > S::zero() { young_effective(lambda_o, mu_o)? } else { S::zero() };
        Ok(Self {
            gamma,
            kappa: base.kappa(),
            a11,
            a33,
            e_o,
            e_1: S::zero(),
            gamma_star: S::zero(),
            e_o_star: S::zero(),
        })
    }
}

/// Asymptotic regime of a scaling family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime<S> {
    /// γ, λ_o, μ_o finite with μ_o > 0: full coupled limit model.
    Critical { gamma: S, lambda_o: S, mu_o: S },
    /// λ_o = μ_o = 0 with γ finite: the fiber stiffness term drops (E_o = 0).
    Soft { gamma: S },
    /// γ = +∞ with λ_o, μ_o finite: fiber and matrix displacements coincide.
    StiffGammaInfinite { lambda_o: S, mu_o: S },
    /// λ^ε r_ε⁴/ε² → λ₁, μ^ε r_ε⁴/ε² → μ₁ finite positive, γ ∈ (0, +∞]:
    /// fibers resist bending. `gamma` is `None` when γ diverges.
    Flexion { gamma: Option<S>, lambda_1: S, mu_1: S },
    /// γ → 0; the limit model is conjectural and solvers refuse it by default.
    GammaZeroConjectural,
    /// No supported limit (e.g. λ_o finite but μ_o infinite).
    Unsupported,
}

/// Tag used to request an inverse scaling in [`fiber_lame_for`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    Critical,
    Soft,
    StiffGammaInfinite,
    Flexion,
    GammaZeroConjectural,
    Unsupported,
}

impl<S: Scalar> Regime<S> {
    pub fn tag(&self) -> RegimeTag {
        match self {
            Regime::Critical { .. } => RegimeTag::Critical,
            Regime::Soft { .. } => RegimeTag::Soft,
            Regime::StiffGammaInfinite { .. } => RegimeTag::StiffGammaInfinite,
            Regime::Flexion { .. } => RegimeTag::Flexion,
            Regime::GammaZeroConjectural => RegimeTag::GammaZeroConjectural,
            Regime::Unsupported => RegimeTag::Unsupported,
        }
    }
}

/// Closed-form scaling family ε ↦ (r_ε, λ^ε, μ^ε).
pub struct ScalingFamily<S> {
    /// ε ↦ r_ε, required to satisfy 0 < r_ε < ε/2 on the evaluated samples.
    pub radius_rule: Box<dyn Fn(S) -> S>,
    /// ε ↦ (λ^ε, μ^ε) with μ^ε ≥ c > 0.
    pub lame_rule: Box<dyn Fn(S) -> LameCoefficients<S>>,
}

impl<S: Scalar> ScalingFamily<S> {
    pub fn new(
        radius_rule: impl Fn(S) -> S + 'static,
        lame_rule: impl Fn(S) -> LameCoefficients<S> + 'static,
    ) -> Self {
        Self { radius_rule: Box::new(radius_rule), lame_rule: Box::new(lame_rule) }
    }
}

/// Inverse scaling: fiber Lamé pair at (ε, r) that realizes the requested
/// limit targets. Critical: (λ_o ε²/r², μ_o ε²/r²); Flexion: (λ₁ ε²/r⁴, μ₁ ε²/r⁴).
pub fn fiber_lame_for<S: Scalar>(
    regime: RegimeTag,
    eps: S,
    r: S,
    targets: (S, S),
) -> Result<LameCoefficients<S>> {
    if !(r > S::zero() && r < eps / lit::<S>(2.0)) {
        return Err(Error::InvalidArgument(format!(
            "fiber_lame_for requires 0 < r < eps/2, got r = {r}, eps = {eps}"
        )));
    }
    let (t_lambda, t_mu) = targets;
    let scale = match regime {
        RegimeTag::Critical => eps * eps / (r * r),
        RegimeTag::Flexion => eps * eps / (r * r * r * r),
        other => {
            return Err(Error::InvalidArgument(format!(
                "fiber_lame_for supports Critical and Flexion tags, got {other:?}"
            )))
        }
    };
    LameCoefficients::new(t_lambda * scale, t_mu * scale)
}

/// Relative tolerance declaring a sampled limit "converged".
const FINITE_TOL: f64 = 1e-6;
/// Magnitude beyond which an extrapolant is declared +∞.
const INFINITE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Extrapolant<S> {
    Finite(S),
    Infinite,
}

/// Extrapolates value(ε) → a by fitting a + b·ε over the two smallest samples.
/// Divergence is declared when the values grow monotonically past the
/// threshold; non-monotone sequences (beyond tolerance) are an error.
fn extrapolate<S: Scalar>(name: &str, eps: &[S], values: &[S]) -> Result<Extrapolant<S>> {
    let n = values.len();
    let scale = values.iter().fold(S::zero(), |m, v| m.max(v.abs())).max(S::one());
    let tol = lit::<S>(FINITE_TOL) * scale;
    // monotonicity diagnostic across the whole sample set
    if n >= 3 {
        let mut rising = false;
        let mut falling = false;
        for w in values.windows(2) {
            let d = w[1] - w[0];
            if d > tol {
                rising = true;
            } else if d < -tol {
                falling = true;
            }
        }
        if rising && falling {
            return Err(Error::Classification(format!(
                "{name} extrapolants are non-monotone beyond tolerance: {values:?}"
            )));
        }
    }
    let last = values[n - 1];
    if last.abs() > lit::<S>(INFINITE_THRESHOLD) {
        return Ok(Extrapolant::Infinite);
    }
    // A sequence that has already shrunk below the finite tolerance is a
    // vanishing limit; the linear fit would overshoot on exponential decay.
    if last.abs() <= lit::<S>(FINITE_TOL) && (n < 2 || values[n - 2].abs() >= last.abs()) {
        return Ok(Extrapolant::Finite(S::zero()));
    }
    if n < 2 {
        return Ok(Extrapolant::Finite(last));
    }
    let (e1, v1) = (eps[n - 2], values[n - 2]);
    let (e0, v0) = (eps[n - 1], values[n - 1]);
    let a = if (e1 - e0).abs() > S::epsilon() {
        v0 - e0 * (v1 - v0) / (e1 - e0)
    } else {
        v0
    };
    if a.abs() > lit::<S>(INFINITE_THRESHOLD) {
        return Ok(Extrapolant::Infinite);
    }
    Ok(Extrapolant::Finite(a))
}

/// Numerically classifies a scaling family from decreasing ε samples.
pub fn classify_regime<S: Scalar>(family: &ScalingFamily<S>, eps_samples: &[S]) -> Result<Regime<S>> {
    if eps_samples.is_empty() {
        return Err(Error::InvalidArgument("classify_regime needs at least one sample".into()));
    }
    for w in eps_samples.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidArgument(format!(
                "eps samples must be strictly decreasing, got {:?}",
                eps_samples
            )));
        }
    }

    let mut gammas = Vec::with_capacity(eps_samples.len());
    let mut lambda_o = Vec::with_capacity(eps_samples.len());
    let mut mu_o = Vec::with_capacity(eps_samples.len());
    let mut lambda_1 = Vec::with_capacity(eps_samples.len());
    let mut mu_1 = Vec::with_capacity(eps_samples.len());
    for &eps in eps_samples {
        let r = (family.radius_rule)(eps);
        if !(r > S::zero() && r < eps / lit::<S>(2.0)) {
            return Err(Error::Classification(format!(
                "radius rule left the admissible band 0 < r < eps/2 at eps = {eps} (r = {r})"
            )));
        }
        let lame = (family.lame_rule)(eps);
        if !(lame.mu > S::zero()) {
            return Err(Error::Classification(format!(
                "lame rule violated mu^eps > 0 at eps = {eps}"
            )));
        }
        gammas.push(gamma_of(eps, r)?);
        let s2 = r * r / (eps * eps);
        lambda_o.push(lame.lambda * s2);
        mu_o.push(lame.mu * s2);
        let s4 = s2 * r * r;
        lambda_1.push(lame.lambda * s4);
        mu_1.push(lame.mu * s4);
    }

    let gamma = extrapolate("gamma", eps_samples, &gammas)?;
    let lo = extrapolate("lambda_o", eps_samples, &lambda_o)?;
    let mo = extrapolate("mu_o", eps_samples, &mu_o)?;
    let l1 = extrapolate("lambda_1", eps_samples, &lambda_1)?;
    let m1 = extrapolate("mu_1", eps_samples, &mu_1)?;

    let zero_tol = lit::<S>(FINITE_TOL);
    if let Extrapolant::Finite(g) = gamma {
        if g.abs() <= zero_tol {
            return Ok(Regime::GammaZeroConjectural);
        }
    }
    match (gamma, lo, mo) {
        (Extrapolant::Finite(g), Extrapolant::Finite(l), Extrapolant::Finite(m)) => {
            if m > zero_tol {
                return Ok(Regime::Critical { gamma: g, lambda_o: l, mu_o: m });
            }
            if l.abs() <= zero_tol && m.abs() <= zero_tol {
                return Ok(Regime::Soft { gamma: g });
            }
        }
        (Extrapolant::Infinite, Extrapolant::Finite(l), Extrapolant::Finite(m)) => {
            return Ok(Regime::StiffGammaInfinite { lambda_o: l, mu_o: m });
        }
        _ => {}
    }
    // λ_o or μ_o diverged: check the bending-dominated scaling.
    if let (Extrapolant::Finite(l1v), Extrapolant::Finite(m1v)) = (l1, m1) {
        if m1v > zero_tol && l1v >= S::zero() {
            match gamma {
                Extrapolant::Infinite => {
                    return Ok(Regime::Flexion { gamma: None, lambda_1: l1v, mu_1: m1v })
                }
                Extrapolant::Finite(g) if g > zero_tol => {
                    return Ok(Regime::Flexion { gamma: Some(g), lambda_1: l1v, mu_1: m1v })
                }
                _ => {}
            }
        }
    }
    Ok(Regime::Unsupported)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lame(lambda: f64, mu: f64) -> LameCoefficients<f64> {
        LameCoefficients::new(lambda, mu).unwrap()
    }

    #[test]
    fn kappa_values() {
        assert_relative_eq!(lame(0.0, 1.0).kappa(), 3.0);
        assert_relative_eq!(lame(1.0, 1.0).kappa(), 2.0);
        assert_relative_eq!(lame(98.0, 1.0).kappa(), 101.0 / 99.0, max_relative = 1e-14);
    }

    #[test]
    fn coupling_matrix_values() {
        assert_eq!(lame(1.0, 1.0).coupling_matrix(), [1.5, 1.5, 1.0]);
        let a = lame(0.0, 1.0).coupling_matrix();
        assert_relative_eq!(a[0], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(a[2], 1.0);
        let a = lame(0.0, 2.0).coupling_matrix();
        assert_relative_eq!(a[0], 8.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(a[2], 2.0);
    }

    #[test]
    fn young_effective_values() {
        assert_relative_eq!(young_effective(1.0, 1.0).unwrap(), 2.5);
        assert_relative_eq!(young_effective(0.0, 1.0).unwrap(), 2.0);
        assert_relative_eq!(young_effective(3.0, 2.0).unwrap(), 5.2);
        assert!(young_effective(1.0, 0.0).is_err());
        assert!(young_effective(1.0, -1.0).is_err());
    }

    #[test]
    fn flexion_young_values() {
        assert_relative_eq!(flexion_young(1.0, 1.0).unwrap(), 2.5);
        assert_relative_eq!(flexion_young(0.0, 1.0).unwrap(), 2.0);
        assert_relative_eq!(flexion_young(2.0, 3.0).unwrap(), 7.2);
    }

    #[test]
    fn gamma_of_values() {
        assert_relative_eq!(gamma_of(0.5, (-2.0f64).exp()).unwrap(), 2.0, max_relative = 1e-14);
        for eps in [0.1f64, 0.25, 0.7] {
            let r = (-1.0 / (eps * eps)).exp();
            assert_relative_eq!(gamma_of(eps, r).unwrap(), 1.0, max_relative = 1e-12);
        }
        // oracle: high-precision arithmetic of -1/(0.01 ln 0.1)
        let expect = -1.0 / (0.01 * 0.1f64.ln());
        assert_relative_eq!(gamma_of(0.1, 0.1).unwrap(), expect, max_relative = 1e-15);
        assert_relative_eq!(expect, 43.42944819032518, max_relative = 1e-12);
        assert!(gamma_of(0.1, 1.0).is_err());
        assert!(gamma_of(0.1, 1.5).is_err());
    }

    #[test]
    fn gamma_round_trip_identity() {
        for (eps, r) in [(0.5, 0.01), (0.25, 1e-6), (0.1, 0.3)] {
            let g: f64 = gamma_of(eps, r).unwrap();
            assert_relative_eq!(g * (eps * eps * r.ln()), -1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn transverse_coefficient_values() {
        let eps = 0.5;
        let r = (-2.0f64).exp();
        let s = eps / (r * r);
        let t = transverse_coefficients(eps, r, &lame(s, s)).unwrap();
        assert_relative_eq!(t.gamma_star, 1.0, max_relative = 1e-14);
        assert_relative_eq!(t.lambda_o_star, 1.0, max_relative = 1e-14);
        assert_relative_eq!(t.mu_o_star, 1.0, max_relative = 1e-14);
        assert_relative_eq!(t.e_o_star, 2.5, max_relative = 1e-14);

        let t = transverse_coefficients(eps, r, &lame(0.0, s)).unwrap();
        assert_relative_eq!(t.e_o_star, 2.0, max_relative = 1e-14);

        let t = transverse_coefficients(0.25, 0.01, &lame(100.0, 100.0)).unwrap();
        assert_relative_eq!(t.gamma_star, -1.0 / (0.25 * 0.01f64.ln()), max_relative = 1e-15);
        assert_relative_eq!(t.lambda_o_star, 0.04, max_relative = 1e-12);
        assert_relative_eq!(t.mu_o_star, 0.04, max_relative = 1e-12);
    }

    #[test]
    fn fiber_lame_for_values() {
        let eps = 0.5;
        let r = (-2.0f64).exp();
        let l = fiber_lame_for(RegimeTag::Critical, eps, r, (1.0, 1.0)).unwrap();
        assert_relative_eq!(l.mu, 0.25 * 4.0f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(l.lambda, l.mu);

        let l = fiber_lame_for(RegimeTag::Critical, eps, r, (0.0, 1.0)).unwrap();
        assert_eq!(l.lambda, 0.0);

        let l = fiber_lame_for(RegimeTag::Flexion, 0.5, 0.1, (0.0, 1.0)).unwrap();
        assert_relative_eq!(l.mu, 2500.0, max_relative = 1e-12);

        assert!(fiber_lame_for(RegimeTag::Soft, 0.5, 0.1, (0.0, 1.0)).is_err());
        assert!(fiber_lame_for(RegimeTag::Critical, 0.5, 0.3, (0.0, 1.0)).is_err());
    }

    fn critical_family(gamma: f64, lambda_o: f64, mu_o: f64) -> ScalingFamily<f64> {
        ScalingFamily::new(
            move |eps: f64| (-1.0 / (gamma * eps * eps)).exp(),
            move |eps| {
                let r = (-1.0 / (gamma * eps * eps)).exp();
                fiber_lame_for(RegimeTag::Critical, eps, r, (lambda_o, mu_o)).unwrap()
            },
        )
    }

    #[test]
    fn classify_critical_exact() {
        let family = critical_family(1.0, 1.0, 1.0);
        match classify_regime(&family, &[0.5, 0.4, 0.3]).unwrap() {
            Regime::Critical { gamma, lambda_o, mu_o } => {
                assert_relative_eq!(gamma, 1.0, max_relative = 1e-12);
                assert_relative_eq!(lambda_o, 1.0, max_relative = 1e-12);
                assert_relative_eq!(mu_o, 1.0, max_relative = 1e-12);
            }
            other => panic!("expected Critical, got {other:?}"),
        }
    }

    #[test]
    fn classify_round_trip_tight() {
        // classify_regime ∘ fiber_lame_for recovers (γ, λ_o, μ_o) to 1e-10
        let (g0, l0, m0) = (2.0, 0.7, 1.3);
        let family = critical_family(g0, l0, m0);
        match classify_regime(&family, &[0.6, 0.5, 0.45, 0.4]).unwrap() {
            Regime::Critical { gamma, lambda_o, mu_o } => {
                assert_relative_eq!(gamma, g0, max_relative = 1e-10);
                assert_relative_eq!(lambda_o, l0, max_relative = 1e-10);
                assert_relative_eq!(mu_o, m0, max_relative = 1e-10);
            }
            other => panic!("expected Critical, got {other:?}"),
        }
    }

    #[test]
    fn classify_soft() {
        let family = ScalingFamily::new(
            |eps: f64| (-1.0 / (eps * eps)).exp(),
            |_| lame(1.0, 1.0),
        );
        match classify_regime(&family, &[0.5, 0.4, 0.3]).unwrap() {
            Regime::Soft { gamma } => assert_relative_eq!(gamma, 1.0, max_relative = 1e-12),
            other => panic!("expected Soft, got {other:?}"),
        }
    }

    #[test]
    fn classify_flexion() {
        // r = eps², fiber Lamé = eps²/r⁴: γ → +∞, λ₁ = μ₁ = 1
        let family = ScalingFamily::new(
            |eps: f64| eps * eps,
            |eps: f64| {
                let r = eps * eps;
                let s = eps * eps / r.powi(4);
                lame(s, s)
            },
        );
        match classify_regime(&family, &[0.1, 0.05, 0.02, 0.01]).unwrap() {
            Regime::Flexion { gamma, lambda_1, mu_1 } => {
                assert!(gamma.is_none() || gamma.unwrap() > 1e3);
                assert_relative_eq!(lambda_1, 1.0, max_relative = 1e-10);
                assert_relative_eq!(mu_1, 1.0, max_relative = 1e-10);
            }
            other => panic!("expected Flexion, got {other:?}"),
        }
    }

    #[test]
    fn classify_rejects_bad_samples() {
        let family = critical_family(1.0, 1.0, 1.0);
        assert!(classify_regime(&family, &[0.3, 0.4]).is_err());
        assert!(classify_regime(&family, &[]).is_err());
    }

    #[test]
    fn classify_rejects_inadmissible_radius() {
        let family = ScalingFamily::new(|eps: f64| eps, |_| lame(1.0, 1.0));
        assert!(classify_regime(&family, &[0.5, 0.4, 0.3]).is_err());
    }

    #[test]
    fn invariant_kappa_range_and_identity() {
        for lambda in [0.0, 0.3, 1.0, 10.0, 500.0] {
            for mu in [0.5, 1.0, 7.0] {
                let m = lame(lambda, mu);
                let k = m.kappa();
                assert!(k > 1.0 && k <= 3.0);
                let a = m.coupling_matrix();
                // exact algebraic identity A11·κ = μ(1+κ)
                assert_relative_eq!(a[0] * k, mu * (1.0 + k), max_relative = 1e-14);
                let ratio = a[0] / a[2];
                assert!(ratio >= 4.0 / 3.0 && ratio < 2.0 + 1e-15);
            }
        }
    }

    #[test]
    fn invariant_young_monotone_in_lambda() {
        let mut prev = young_effective(0.0f64, 2.0).unwrap();
        assert_relative_eq!(prev, 4.0);
        for lambda in [0.1, 0.5, 1.0, 5.0, 100.0] {
            let e = young_effective(lambda, 2.0).unwrap();
            assert!(e > prev);
            prev = e;
        }
    }
}

//! Scenario configuration: TOML with JSON fallback.

use fibrel::expr::Expr;
use fibrel::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub material: MaterialSection,
    #[serde(default)]
    pub fiber: FiberSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub load: LoadSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub cell_verify: CellVerifySection,
    #[serde(default)]
    pub recovery: Option<RecoverySection>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub lambda: f64,
    pub mu: f64,
}

/// Limit fiber constants. Critical/soft/stiff scenarios use (γ, λ_o, μ_o);
/// flexion scenarios use (λ₁, μ₁) and γ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSection {
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub lambda_o: f64,
    #[serde(default = "one")]
    pub mu_o: f64,
    #[serde(default)]
    pub lambda_1: f64,
    #[serde(default)]
    pub mu_1: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for FiberSection {
    fn default() -> Self {
        Self { gamma: 1.0, lambda_o: 1.0, mu_o: 1.0, lambda_1: 0.0, mu_1: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// Cross-section ω = (0, a) × (0, b).
    #[serde(default = "unit_pair")]
    pub omega: [f64; 2],
    #[serde(default = "one")]
    pub length: f64,
}

fn unit_pair() -> [f64; 2] {
    [1.0, 1.0]
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { omega: [1.0, 1.0], length: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n")]
    pub nx: usize,
    #[serde(default = "default_n")]
    pub ny: usize,
    #[serde(default = "default_nz")]
    pub nz: usize,
}

fn default_n() -> usize {
    17
}
fn default_nz() -> usize {
    9
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 17, ny: 17, nz: 9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    /// Body force components as expressions in x1, x2, x3.
    #[serde(default = "default_force")]
    pub f: [String; 3],
    /// Optional in-plane weight |∇θ⁻¹|(x1, x2) on coupling and fiber terms.
    #[serde(default)]
    pub weight: Option<String>,
    /// Optional axial fiber-modulus profile E^o(x3), an expression in x3.
    #[serde(default)]
    pub e_o_profile: Option<String>,
}

fn default_force() -> [String; 3] {
    ["0".into(), "0".into(), "1".into()]
}

impl Default for LoadSection {
    fn default() -> Self {
        Self { f: default_force(), weight: None, e_o_profile: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.5, 0.354]
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { epsilons: default_epsilons() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellVerifySection {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_nr")]
    pub n_r: usize,
    #[serde(default = "default_ntheta")]
    pub n_theta: usize,
}

fn default_radii() -> Vec<f64> {
    vec![1e2, 1e3, 1e4, 1e6]
}
fn default_nr() -> usize {
    48
}
fn default_ntheta() -> usize {
    32
}

impl Default for CellVerifySection {
    fn default() -> Self {
        Self { radii: default_radii(), n_r: default_nr(), n_theta: default_ntheta() }
    }
}

/// Smooth pair (u, v) for the recovery-sequence check; v₃' is derived
/// symbolically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySection {
    pub u: [String; 3],
    pub v: [String; 3],
}

/// A parsed 3-vector expression.
pub struct VectorExpr {
    pub components: [Expr; 3],
}

impl VectorExpr {
    pub fn parse(src: &[String; 3]) -> Result<Self> {
        Ok(Self {
            components: [
                Expr::parse(&src[0])?,
                Expr::parse(&src[1])?,
                Expr::parse(&src[2])?,
            ],
        })
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        [
            self.components[0].eval(x),
            self.components[1].eval(x),
            self.components[2].eval(x),
        ]
    }

    /// Componentwise ∂/∂x₃.
    pub fn d3(&self) -> Self {
        Self {
            components: [
                self.components[0].derivative(2),
                self.components[1].derivative(2),
                self.components[2].derivative(2),
            ],
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let scenario: Scenario = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("JSON parse error in {}: {e}", path.display())))?
        } else {
            match toml::from_str(&text) {
                Ok(s) => s,
                Err(toml_err) => serde_json::from_str(&text).map_err(|_| {
                    Error::Config(format!("TOML parse error in {}: {toml_err}", path.display()))
                })?,
            }
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.material.mu > 0.0 && self.material.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "material requires mu > 0 and lambda >= 0, got lambda = {}, mu = {}",
                self.material.lambda, self.material.mu
            )));
        }
        if !(self.fiber.gamma >= 0.0 && self.fiber.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "fiber.gamma must be finite and >= 0, got {}",
                self.fiber.gamma
            )));
        }
        if self.fiber.lambda_o < 0.0 || self.fiber.mu_o < 0.0 {
            return Err(Error::Config("fiber limit constants must be >= 0".into()));
        }
        if !(self.geometry.omega[0] > 0.0
            && self.geometry.omega[1] > 0.0
            && self.geometry.length > 0.0)
        {
            return Err(Error::Config("geometry dimensions must be positive".into()));
        }
        if self.grid.nx < 2 || self.grid.ny < 2 || self.grid.nz < 2 {
            return Err(Error::Config("grid needs at least 2 nodes per direction".into()));
        }
        if self.sweep.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Config("sweep epsilons must be positive".into()));
        }
        for c in &self.load.f {
            Expr::parse(c).map_err(|e| Error::Config(format!("load.f: {e}")))?;
        }
        if let Some(w) = &self.load.weight {
            Expr::parse(w).map_err(|e| Error::Config(format!("load.weight: {e}")))?;
        }
        if let Some(p) = &self.load.e_o_profile {
            Expr::parse(p).map_err(|e| Error::Config(format!("load.e_o_profile: {e}")))?;
        }
        if let Some(rec) = &self.recovery {
            for c in rec.u.iter().chain(rec.v.iter()) {
                Expr::parse(c).map_err(|e| Error::Config(format!("recovery: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn base(&self) -> Result<fibrel::Lame> {
        fibrel::material::LameCoefficients::new(self.material.lambda, self.material.mu)
    }

    pub fn grid(&self) -> Result<fibrel::grid::StructuredGrid> {
        fibrel::grid::StructuredGrid::new(
            self.geometry.omega[0],
            self.geometry.omega[1],
            self.geometry.length,
            self.grid.nx,
            self.grid.ny,
            self.grid.nz,
        )
    }

    /// Critical-scaling fiber radius r_ε = exp(−1/(γε²)).
    pub fn radius_for(&self, eps: f64) -> Result<f64> {
        if self.fiber.gamma <= 0.0 {
            return Err(Error::Conjectural(
                "gamma = 0 has no critical radius; the limit model is conjectural".into(),
            ));
        }
        Ok((-1.0 / (self.fiber.gamma * eps * eps)).exp())
    }

    /// E_o = μ_o(3λ_o+2μ_o)/(λ_o+μ_o), or 0 in the soft case.
    pub fn e_o(&self) -> Result<f64> {
        if self.fiber.mu_o > 0.0 {
            fibrel::material::young_effective(self.fiber.lambda_o, self.fiber.mu_o)
        } else {
            Ok(0.0)
        }
    }
}

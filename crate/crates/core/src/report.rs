//! Result containers shared by the solvers and the scenario runner.

use serde::{Deserialize, Serialize};

/// Quadratic-form breakdown of a (limit or fine-scale) energy value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// ∫ σ(u):e(u)
    pub elastic: f64,
    /// 2πγ ∫ (v−u)ᵀA(v−u)
    pub coupling: f64,
    /// πE_o ∫ (e₃₃(v))² (or the bending term in the flexion regime)
    pub fiber: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.elastic + self.coupling + self.fiber
    }
}

/// Linear-solver convergence record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Energy report emitted next to solved fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy_total: f64,
    pub energy_elastic: f64,
    pub energy_coupling: f64,
    pub energy_fiber: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl EnergyReport {
    pub fn new(breakdown: EnergyBreakdown, info: SolveInfo) -> Self {
        Self {
            energy_total: breakdown.total(),
            energy_elastic: breakdown.elastic,
            energy_coupling: breakdown.coupling,
            energy_fiber: breakdown.fiber,
            residual_norm: info.residual_norm,
            iterations: info.iterations,
        }
    }
}

/// Geometry manifest of a voxelized fiber layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutManifest {
    pub epsilon: f64,
    pub r: f64,
    pub s: f64,
    pub n_fibers: usize,
    pub volume_fraction: f64,
}

/// One row of the ε-sweep convergence table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub f_eps: f64,
    pub f_limit: f64,
    pub gap_rel: f64,
    pub korn_ratio: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_totals() {
        let b = EnergyBreakdown { elastic: 1.0, coupling: 0.25, fiber: 0.5 };
        let r = EnergyReport::new(b, SolveInfo { iterations: 7, residual_norm: 1e-11 });
        assert_eq!(r.energy_total, 1.75);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"energy_total\":1.75"));
        assert!(json.contains("\"iterations\":7"));
    }
}

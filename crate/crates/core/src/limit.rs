//! Finite-element minimization of the homogenized functionals.
//!
//! The critical-regime functional couples a bulk displacement u ∈ H¹ (zero
//! on the clamped base Γ₁) to a fiber longitudinal displacement v₃:
//!
//! ```text
//! F(u, v₃) = ∫ σ(u):e(u) + 2πγ ∫ (v − u)ᵀ A (v − u) + πE_o ∫ (∂₃v₃)²
//! ```
//!
//! with v = (u₁, u₂, v₃): the transverse fiber displacements are identified
//! with the bulk ones (the coupling is a pointwise quadratic with no
//! v_α-derivatives, so the elimination is exact). The stiff limit replaces
//! v₃ by u₃; the flexion regime instead keeps independent transverse fiber
//! deflections v₁, v₂ with an H²-in-x₃ bending energy (πE₁/4)∫(∂₃₃v_α)²,
//! discretized by cubic Hermite segments along x₃ tensorized with bilinear
//! in-plane interpolation.
//!
//! Solvers minimize F(·) − 2∫f·u over trilinear hexahedra (2×2×2 Gauss) by
//! Jacobi-preconditioned conjugate gradients; Dirichlet conditions are
//! eliminated symmetrically. An optional positive weight w(x₁, x₂)
//! multiplies the coupling and fiber terms, and the fiber Young modulus may
//! vary along the axis as E^o(x₃).

use crate::error::{Error, Result};
use crate::fem::{d33_ke, elastic_ke, gauss_points, hermite_eval, mass_me, GaussPoint};
use crate::grid::StructuredGrid;
use crate::material::LameCoefficients;
use crate::quad::gauss_legendre;
use crate::report::{EnergyBreakdown, SolveInfo};
use crate::sparse::{cg_jacobi, default_max_iter, CsrBuilder, CsrMatrix, CG_TOL};

/// Discrete limit state: bulk displacement, fiber longitudinal displacement,
/// and (flexion regime only) transverse fiber deflections with axial slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub u: Vec<[f64; 3]>,
    pub v3: Vec<f64>,
    pub flexion: Option<FlexionField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlexionField {
    /// Nodal (v₁, v₂).
    pub v: Vec<[f64; 2]>,
    /// Nodal (∂₃v₁, ∂₃v₂) Hermite slope dofs.
    pub slope: Vec<[f64; 2]>,
}

impl LimitState {
    pub fn zeros(n_nodes: usize) -> Self {
        Self { u: vec![[0.0; 3]; n_nodes], v3: vec![0.0; n_nodes], flexion: None }
    }
}

/// Essential boundary conditions of the bulk displacement.
#[derive(Clone, Copy)]
pub enum BoundaryCondition<'a> {
    /// u = 0 and v₃ = 0 on Γ₁ (x₃ = 0); natural elsewhere.
    ClampedBase,
    /// u = g on the whole boundary — for manufactured-solution studies,
    /// where the exact field does not satisfy traction-free conditions.
    Manufactured(&'a dyn Fn([f64; 3]) -> [f64; 3]),
}

#[derive(Clone, Copy)]
pub struct LimitOptions<'a> {
    /// Positive in-plane weight multiplying coupling and fiber terms.
    pub weight: Option<&'a dyn Fn(f64, f64) -> f64>,
    /// Axially varying fiber Young modulus E^o(x₃); overrides the constant.
    pub e_o_profile: Option<&'a dyn Fn(f64) -> f64>,
    /// Pins every bulk dof to the given field (fiber unknowns stay free).
    pub pin_u: Option<&'a dyn Fn([f64; 3]) -> [f64; 3]>,
    pub bc: BoundaryCondition<'a>,
}

impl Default for LimitOptions<'_> {
    fn default() -> Self {
        Self { weight: None, e_o_profile: None, pin_u: None, bc: BoundaryCondition::ClampedBase }
    }
}

fn check_coefficients(gamma: f64, e_o: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    if !(e_o.is_finite() && e_o >= 0.0) {
        return Err(Error::InvalidArgument(format!("E_o must be finite and >= 0, got {e_o}")));
    }
    Ok(())
}

/// F(u, v₃) by direct 2×2×2 Gauss quadrature from nodal values.
pub fn limit_energy(
    state: &LimitState,
    grid: &StructuredGrid,
    base: &LameCoefficients<f64>,
    gamma: f64,
    e_o: f64,
    opts: &LimitOptions,
) -> Result<EnergyBreakdown> {
    check_coefficients(gamma, e_o)?;
    let n = grid.n_nodes();
    if state.u.len() != n || state.v3.len() != n {
        return Err(Error::InvalidArgument(format!(
            "state has {} / {} entries for a grid of {} nodes",
            state.u.len(),
            state.v3.len(),
            n
        )));
    }
    let h = grid.spacing();
    let gps = gauss_points(h);
    let a33 = base.coupling_matrix()[2];
    let c_coupling = 2.0 * std::f64::consts::PI * gamma * a33;
    let mut out = EnergyBreakdown::default();
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        let origin = grid.node_coords(nodes[0]);
        for gp in &gps {
            let x = [
                origin[0] + gp.local[0],
                origin[1] + gp.local[1],
                origin[2] + gp.local[2],
            ];
            let w_geom = opts.weight.map_or(1.0, |w| w(x[0], x[1]));
            let e_here = opts.e_o_profile.map_or(e_o, |p| p(x[2]));
            let mut grad_u = [[0.0; 3]; 3];
            let mut u3 = 0.0;
            let mut v3 = 0.0;
            let mut dv3 = 0.0;
            for (a, &node) in nodes.iter().enumerate() {
                let ua = state.u[node];
                for i in 0..3 {
                    for j in 0..3 {
                        grad_u[i][j] += ua[i] * gp.grad[a][j];
                    }
                }
                u3 += gp.shape[a] * ua[2];
                v3 += gp.shape[a] * state.v3[node];
                dv3 += gp.grad[a][2] * state.v3[node];
            }
            let mut tr = 0.0;
            let mut ee = 0.0;
            for i in 0..3 {
                tr += grad_u[i][i];
                for j in 0..3 {
                    let eij = 0.5 * (grad_u[i][j] + grad_u[j][i]);
                    ee += eij * eij;
                }
            }
            out.elastic += gp.weight * (base.lambda * tr * tr + 2.0 * base.mu * ee);
            let d = v3 - u3;
            out.coupling += gp.weight * w_geom * c_coupling * d * d;
            out.fiber += gp.weight * w_geom * std::f64::consts::PI * e_here * dv3 * dv3;
        }
    }
    Ok(out)
}

/// Per-element coupling/fiber scalar factors sampled at Gauss points (slow
/// path; only used when a weight or axial profile is present).
fn weighted_scalar_matrices(
    gps: &[GaussPoint],
    origin: [f64; 3],
    c_coupling: f64,
    e_o: f64,
    opts: &LimitOptions,
) -> ([[f64; 8]; 8], [[f64; 8]; 8]) {
    let mut cpl = [[0.0; 8]; 8];
    let mut fib = [[0.0; 8]; 8];
    for gp in gps {
        let x = [origin[0] + gp.local[0], origin[1] + gp.local[1], origin[2] + gp.local[2]];
        let w_geom = opts.weight.map_or(1.0, |w| w(x[0], x[1]));
        let e_here = opts.e_o_profile.map_or(e_o, |p| p(x[2]));
        for a in 0..8 {
            for b in 0..8 {
                cpl[a][b] += gp.weight * w_geom * c_coupling * gp.shape[a] * gp.shape[b];
                fib[a][b] += gp.weight
                    * w_geom
                    * std::f64::consts::PI
                    * e_here
                    * gp.grad[a][2]
                    * gp.grad[b][2];
            }
        }
    }
    (cpl, fib)
}

fn load_vector(
    grid: &StructuredGrid,
    gps: &[GaussPoint],
    f: &dyn Fn([f64; 3]) -> [f64; 3],
    ndof_per_node: usize,
    rhs: &mut [f64],
) {
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        let origin = grid.node_coords(nodes[0]);
        for gp in gps {
            let x = [
                origin[0] + gp.local[0],
                origin[1] + gp.local[1],
                origin[2] + gp.local[2],
            ];
            let fv = f(x);
            for (a, &node) in nodes.iter().enumerate() {
                for c in 0..3 {
                    rhs[ndof_per_node * node + c] += gp.weight * gp.shape[a] * fv[c];
                }
            }
        }
    }
}

fn bulk_dirichlet(
    grid: &StructuredGrid,
    opts: &LimitOptions,
    ndof_per_node: usize,
    fixed: &mut Vec<(usize, f64)>,
) {
    if let Some(pin) = opts.pin_u {
        for node in 0..grid.n_nodes() {
            let g = pin(grid.node_coords(node));
            for c in 0..3 {
                fixed.push((ndof_per_node * node + c, g[c]));
            }
        }
        return;
    }
    match opts.bc {
        BoundaryCondition::ClampedBase => {
            for node in 0..grid.n_nodes() {
                if grid.is_gamma1(node) {
                    for c in 0..3 {
                        fixed.push((ndof_per_node * node + c, 0.0));
                    }
                }
            }
        }
        BoundaryCondition::Manufactured(g) => {
            for node in 0..grid.n_nodes() {
                if grid.is_boundary(node) {
                    let gv = g(grid.node_coords(node));
                    for c in 0..3 {
                        fixed.push((ndof_per_node * node + c, gv[c]));
                    }
                }
            }
        }
    }
}

struct AssembledLimit {
    matrix: CsrMatrix,
    rhs: Vec<f64>,
}

fn assemble_limit(
    grid: &StructuredGrid,
    base: &LameCoefficients<f64>,
    gamma: f64,
    e_o: f64,
    f: &dyn Fn([f64; 3]) -> [f64; 3],
    opts: &LimitOptions,
) -> AssembledLimit {
    let n = grid.n_nodes();
    let ndof = 4 * n;
    let h = grid.spacing();
    let gps = gauss_points(h);
    let ke = elastic_ke(h, base);
    let a33 = base.coupling_matrix()[2];
    let c_coupling = 2.0 * std::f64::consts::PI * gamma * a33;
    let me = mass_me(h);
    let de = d33_ke(h);
    let uniform = opts.weight.is_none() && opts.e_o_profile.is_none();

    let mut builder = CsrBuilder::new(ndof);
    let mut clique = [0usize; 32];
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        for (a, &node) in nodes.iter().enumerate() {
            for c in 0..4 {
                clique[4 * a + c] = 4 * node + c;
            }
        }
        builder.add_clique(&clique);
    }
    let mut matrix = builder.finalize();

    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        let origin = grid.node_coords(nodes[0]);
        let (cpl, fib) = if uniform {
            let mut cpl = [[0.0; 8]; 8];
            let mut fib = [[0.0; 8]; 8];
            for a in 0..8 {
                for b in 0..8 {
                    cpl[a][b] = c_coupling * me[a][b];
                    fib[a][b] = std::f64::consts::PI * e_o * de[a][b];
                }
            }
            (cpl, fib)
        } else {
            weighted_scalar_matrices(&gps, origin, c_coupling, e_o, opts)
        };
        for a in 0..8 {
            for b in 0..8 {
                // elastic block on u
                for i in 0..3 {
                    for j in 0..3 {
                        let v = ke[(3 * a + i) * 24 + (3 * b + j)];
                        if v != 0.0 {
                            matrix.add(4 * nodes[a] + i, 4 * nodes[b] + j, v);
                        }
                    }
                }
                // coupling (v₃ − u₃)²
                let c = cpl[a][b];
                if c != 0.0 {
                    matrix.add(4 * nodes[a] + 2, 4 * nodes[b] + 2, c);
                    matrix.add(4 * nodes[a] + 3, 4 * nodes[b] + 3, c);
                    matrix.add(4 * nodes[a] + 2, 4 * nodes[b] + 3, -c);
                    matrix.add(4 * nodes[a] + 3, 4 * nodes[b] + 2, -c);
                }
                // fiber stretching on v₃
                let fv = fib[a][b];
                if fv != 0.0 {
                    matrix.add(4 * nodes[a] + 3, 4 * nodes[b] + 3, fv);
                }
            }
        }
    }

    let mut rhs = vec![0.0; ndof];
    load_vector(grid, &gps, f, 4, &mut rhs);
    AssembledLimit { matrix, rhs }
}

fn limit_dirichlet(
    grid: &StructuredGrid,
    gamma: f64,
    e_o: f64,
    opts: &LimitOptions,
) -> Vec<(usize, f64)> {
    let mut fixed = Vec::new();
    bulk_dirichlet(grid, opts, 4, &mut fixed);
    let v3_inactive = gamma == 0.0 && e_o == 0.0;
    for node in 0..grid.n_nodes() {
        if v3_inactive || grid.is_gamma1(node) {
            fixed.push((4 * node + 3, 0.0));
        }
    }
    fixed
}

/// Minimizes F(u, v₃) − 2∫f·u; returns the state, the energy breakdown of
/// F at the minimizer, and the linear-solver record.
pub fn solve_limit(
    grid: &StructuredGrid,
    base: &LameCoefficients<f64>,
    gamma: f64,
    e_o: f64,
    f: &dyn Fn([f64; 3]) -> [f64; 3],
    opts: &LimitOptions,
) -> Result<(LimitState, EnergyBreakdown, SolveInfo)> {
    check_coefficients(gamma, e_o)?;
    let mut sys = assemble_limit(grid, base, gamma, e_o, f, opts);
    let fixed = limit_dirichlet(grid, gamma, e_o, opts);
    sys.matrix.eliminate_dirichlet(&fixed, &mut sys.rhs);
    let sol = cg_jacobi(&sys.matrix, &sys.rhs, CG_TOL, default_max_iter(sys.matrix.n()))?;
    let n = grid.n_nodes();
    let mut state = LimitState::zeros(n);
    for node in 0..n {
        for c in 0..3 {
            state.u[node][c] = sol.x[4 * node + c];
        }
        state.v3[node] = sol.x[4 * node + 3];
    }
    let energy = limit_energy(&state, grid, base, gamma, e_o, opts)?;
    let info = SolveInfo { iterations: sol.iterations, residual_norm: sol.relative_residual };
    Ok((state, energy, info))
}

/// Discrete residual norms of the Euler–Lagrange system, per unknown block.
#[derive(Debug, Clone, Copy)]
pub struct BlockResiduals {
    /// ‖(b − Kx)‖ over the bulk-displacement dofs.
    pub u: f64,
    /// ‖(b − Kx)‖ over the fiber-longitudinal dofs.
    pub v3: f64,
    /// Total residual relative to ‖b‖ (1 when b = 0 but Kx ≠ 0).
    pub total_relative: f64,
}

pub fn el_residual(
    state: &LimitState,
    grid: &StructuredGrid,
    base: &LameCoefficients<f64>,
    gamma: f64,
    e_o: f64,
    f: &dyn Fn([f64; 3]) -> [f64; 3],
    opts: &LimitOptions,
) -> Result<BlockResiduals> {
    check_coefficients(gamma, e_o)?;
    let n = grid.n_nodes();
    if state.u.len() != n || state.v3.len() != n {
        return Err(Error::InvalidArgument("state size does not match the grid".into()));
    }
    let mut sys = assemble_limit(grid, base, gamma, e_o, f, opts);
    let fixed = limit_dirichlet(grid, gamma, e_o, opts);
    sys.matrix.eliminate_dirichlet(&fixed, &mut sys.rhs);
    let mut x = vec![0.0; 4 * n];
    for node in 0..n {
        for c in 0..3 {
            x[4 * node + c] = state.u[node][c];
        }
        x[4 * node + 3] = state.v3[node];
    }
    let mut kx = vec![0.0; 4 * n];
    sys.matrix.matvec(&x, &mut kx);
    let mut ru = 0.0;
    let mut rv = 0.0;
    for node in 0..n {
        for c in 0..3 {
            let r = sys.rhs[4 * node + c] - kx[4 * node + c];
            ru += r * r;
        }
        let r = sys.rhs[4 * node + 3] - kx[4 * node + 3];
        rv += r * r;
    }
    let b_norm = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let total = (ru + rv).sqrt();
    Ok(BlockResiduals {
        u: ru.sqrt(),
        v3: rv.sqrt(),
        total_relative: if b_norm > 0.0 { total / b_norm } else { (total > 0.0) as u8 as f64 },
    })
}

/// The stiff (γ = ∞) limit: v ≡ u, minimize
/// ∫σ(u):e(u) + πE_o∫(e₃₃(u))² − 2∫f·u.
pub fn solve_stiff_limit(
    grid: &StructuredGrid,
    base: &LameCoefficients<f64>,
    e_o: f64,
    f: &dyn Fn([f64; 3]) -> [f64; 3],
    opts: &LimitOptions,
) -> Result<(LimitState, EnergyBreakdown, SolveInfo)> {
    check_coefficients(0.0, e_o)?;
    let n = grid.n_nodes();
    let ndof = 3 * n;
    let h = grid.spacing();
    let gps = gauss_points(h);
    let ke = elastic_ke(h, base);
    let de = d33_ke(h);

    let mut builder = CsrBuilder::new(ndof);
    let mut clique = [0usize; 24];
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        for (a, &node) in nodes.iter().enumerate() {
            for c in 0..3 {
                clique[3 * a + c] = 3 * node + c;
            }
        }
        builder.add_clique(&clique);
    }
    let mut matrix = builder.finalize();
    let uniform = opts.weight.is_none() && opts.e_o_profile.is_none();
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        let origin = grid.node_coords(nodes[0]);
        let fib = if uniform {
            let mut fib = [[0.0; 8]; 8];
            for a in 0..8 {
                for b in 0..8 {
                    fib[a][b] = std::f64::consts::PI * e_o * de[a][b];
                }
            }
            fib
        } else {
            weighted_scalar_matrices(&gps, origin, 0.0, e_o, opts).1
        };
        for a in 0..8 {
            for b in 0..8 {
                for i in 0..3 {
                    for j in 0..3 {
                        let v = ke[(3 * a + i) * 24 + (3 * b + j)];
                        if v != 0.0 {
                            matrix.add(3 * nodes[a] + i, 3 * nodes[b] + j, v);
                        }
                    }
                }
                if fib[a][b] != 0.0 {
                    matrix.add(3 * nodes[a] + 2, 3 * nodes[b] + 2, fib[a][b]);
                }
            }
        }
    }
    let mut rhs = vec![0.0; ndof];
    load_vector(grid, &gps, f, 3, &mut rhs);
    let mut fixed = Vec::new();
    bulk_dirichlet(grid, opts, 3, &mut fixed);
    matrix.eliminate_dirichlet(&fixed, &mut rhs);
    let sol = cg_jacobi(&matrix, &rhs, CG_TOL, default_max_iter(ndof))?;
    let mut state = LimitState::zeros(n);
    for node in 0..n {
        for c in 0..3 {
            state.u[node][c] = sol.x[3 * node + c];
        }
        state.v3[node] = state.u[node][2];
    }
    // with v₃ ≡ u₃ the coupling term vanishes identically
    let energy = limit_energy(&state, grid, base, 0.0, e_o, opts)?;
    let info = SolveInfo { iterations: sol.iterations, residual_norm: sol.relative_residual };
    Ok((state, energy, info))
}

// ---------------------------------------------------------------------------
// Flexion regime: independent transverse fiber deflections with H² bending.
// ---------------------------------------------------------------------------

/// Per-node dof layout of the flexion system.
const FLEX_DOFS: usize = 7; // u₁ u₂ u₃ v₁ ∂₃v₁ v₂ ∂₃v₂

struct FlexQuadPoint {
    weight: f64,
    /// Trilinear shape values of the 8 corners.
    tri: [f64; 8],
    /// Physical gradients of the trilinear shapes.
    tri_grad: [[f64; 3]; 8],
    /// v-basis values: 4 in-plane corners × 4 Hermite functions.
    herm: [[f64; 4]; 4],
    /// Second x₃-derivatives of the v-basis.
    herm_dd: [[f64; 4]; 4],
}

/// 2×2×4 quadrature: products of cubics along x₃ (degree 6) need 4 Gauss
/// points; the in-plane factors are bilinear.
fn flexion_quadrature(h: [f64; 3]) -> Vec<FlexQuadPoint> {
    let g2: Vec<(f64, f64)> = gauss_legendre::<f64>(2);
    let g4: Vec<(f64, f64)> = gauss_legendre::<f64>(4);
    let det = h[0] * h[1] * h[2] / 8.0;
    let mut pts = Vec::with_capacity(16);
    for &(x1, w1) in &g2 {
        for &(x2, w2) in &g2 {
            for &(x3, w3) in &g4 {
                let (tri, dref) = crate::fem::shape_trilinear([x1, x2, x3]);
                let mut tri_grad = [[0.0; 3]; 8];
                for a in 0..8 {
                    for i in 0..3 {
                        tri_grad[a][i] = dref[a][i] * 2.0 / h[i];
                    }
                }
                let p = 0.5 * (x1 + 1.0);
                let q = 0.5 * (x2 + 1.0);
                // in-plane corner order (0,0), (1,0), (1,1), (0,1)
                let plane = [(1.0 - p) * (1.0 - q), p * (1.0 - q), p * q, (1.0 - p) * q];
                let t = 0.5 * (x3 + 1.0);
                let (hv, _, hdd) = hermite_eval(t, h[2]);
                let mut herm = [[0.0; 4]; 4];
                let mut herm_dd = [[0.0; 4]; 4];
                for c in 0..4 {
                    for k in 0..4 {
                        herm[c][k] = plane[c] * hv[k];
                        herm_dd[c][k] = plane[c] * hdd[k];
                    }
                }
                pts.push(FlexQuadPoint {
                    weight: det * w1 * w2 * w3,
                    tri,
                    tri_grad,
                    herm,
                    herm_dd,
                });
            }
        }
    }
    pts
}

/// v-dof indices of one element for component `alpha` (0 or 1): 4 in-plane
/// corners × (bottom value, bottom slope, top value, top slope).
fn flex_v_dofs(nodes: &[usize; 8], alpha: usize) -> [usize; 16] {
    // corner c of the in-plane quad maps to bottom node c and top node 4 + c
    let base = 3 + 2 * alpha;
    let mut dofs = [0usize; 16];
    for c in 0..4 {
        dofs[4 * c] = FLEX_DOFS * nodes[c] + base;
        dofs[4 * c + 1] = FLEX_DOFS * nodes[c] + base + 1;
        dofs[4 * c + 2] = FLEX_DOFS * nodes[4 + c] + base;
        dofs[4 * c + 3] = FLEX_DOFS * nodes[4 + c] + base + 1;
    }
    dofs
}

/// Energy of a flexion state:
/// ∫σ(u):e(u) + 2πγ∫[A₁₁((v₁−u₁)² + (v₂−u₂)²) + A₃₃u₃²]
/// + (πE₁/4)∫((∂₃₃v₁)² + (∂₃₃v₂)²).
pub fn flexion_energy(
    state: &LimitState,
    grid: &StructuredGrid,
    base: &LameCoefficients<f64>,
    gamma: f64,
    e_1: f64,
) -> Result<EnergyBreakdown> {
    let flex = state
        .flexion
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("state carries no flexion field".into()))?;
    let n = grid.n_nodes();
    if state.u.len() != n || flex.v.len() != n || flex.slope.len() != n {
        return Err(Error::InvalidArgument("state size does not match the grid".into()));
    }
    let h = grid.spacing();
    let pts = flexion_quadrature(h);
    let a = base.coupling_matrix();
    let two_pi_gamma = 2.0 * std::f64::consts::PI * gamma;
    let bend_c = std::f64::consts::PI * e_1 / 4.0;
    let mut out = EnergyBreakdown::default();
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        for gp in &pts {
            let mut grad_u = [[0.0; 3]; 3];
            let mut u_val = [0.0; 3];
            for (an, &node) in nodes.iter().enumerate() {
                for i in 0..3 {
                    u_val[i] += gp.tri[an] * state.u[node][i];
                    for j in 0..3 {
                        grad_u[i][j] += state.u[node][i] * gp.tri_grad[an][j];
                    }
                }
            }
            let mut tr = 0.0;
            let mut ee = 0.0;
            for i in 0..3 {
                tr += grad_u[i][i];
                for j in 0..3 {
                    let eij = 0.5 * (grad_u[i][j] + grad_u[j][i]);
                    ee += eij * eij;
                }
            }
            out.elastic += gp.weight * (base.lambda * tr * tr + 2.0 * base.mu * ee);

            let mut v_val = [0.0; 2];
            let mut v_dd = [0.0; 2];
            for alpha in 0..2 {
                for c in 0..4 {
                    let nb = nodes[c];
                    let nt = nodes[4 + c];
                    let dofs = [
                        flex.v[nb][alpha],
                        flex.slope[nb][alpha],
                        flex.v[nt][alpha],
                        flex.slope[nt][alpha],
                    ];
                    for k in 0..4 {
                        v_val[alpha] += gp.herm[c][k] * dofs[k];
                        v_dd[alpha] += gp.herm_dd[c][k] * dofs[k];
                    }
                }
            }
            let d1 = v_val[0] - u_val[0];
            let d2 = v_val[1] - u_val[1];
            out.coupling += gp.weight
                * two_pi_gamma
                * (a[0] * (d1 * d1 + d2 * d2) + a[2] * u_val[2] * u_val[2]);
            out.fiber += gp.weight * bend_c * (v_dd[0] * v_dd[0] + v_dd[1] * v_dd[1]);
        }
    }
    Ok(out)
}

/// Minimizes the flexion functional − 2∫f·u. The transverse deflections are
/// clamped in value on Γ₁ (slopes free), matching L²(ω, H²(0, L)) with the
/// base condition only.
pub fn solve_flexion_limit(
    grid: &StructuredGrid,
    base: &LameCoefficients<f64>,
    e_1: f64,
    gamma: f64,
    f: &dyn Fn([f64; 3]) -> [f64; 3],
    opts: &LimitOptions,
) -> Result<(LimitState, EnergyBreakdown, SolveInfo)> {
    if !(e_1 > 0.0 && e_1.is_finite()) {
        return Err(Error::InvalidArgument(format!("E_1 must be positive and finite, got {e_1}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "flexion solve needs finite gamma > 0, got {gamma}"
        )));
    }
    let n = grid.n_nodes();
    let ndof = FLEX_DOFS * n;
    let h = grid.spacing();
    let pts = flexion_quadrature(h);
    let a = base.coupling_matrix();
    let two_pi_gamma = 2.0 * std::f64::consts::PI * gamma;
    let bend_c = std::f64::consts::PI * e_1 / 4.0;

    let mut builder = CsrBuilder::new(ndof);
    let mut clique = [0usize; 56];
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        for (an, &node) in nodes.iter().enumerate() {
            for c in 0..3 {
                clique[3 * an + c] = FLEX_DOFS * node + c;
            }
        }
        let v1 = flex_v_dofs(&nodes, 0);
        let v2 = flex_v_dofs(&nodes, 1);
        clique[24..40].copy_from_slice(&v1);
        clique[40..56].copy_from_slice(&v2);
        builder.add_clique(&clique);
    }
    let mut matrix = builder.finalize();

    // element matrix in local order: 24 u-dofs, then 16 v₁, then 16 v₂
    let mut ke_local = vec![0.0; 56 * 56];
    for gp in &pts {
        // elastic
        for an in 0..8 {
            for bn in 0..8 {
                let ga = gp.tri_grad[an];
                let gb = gp.tri_grad[bn];
                let dot = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
                for i in 0..3 {
                    for j in 0..3 {
                        let mut v = base.lambda * ga[i] * gb[j] + base.mu * ga[j] * gb[i];
                        if i == j {
                            v += base.mu * dot;
                        }
                        ke_local[(3 * an + i) * 56 + (3 * bn + j)] += gp.weight * v;
                    }
                }
                // A₃₃ u₃² zero-order coupling
                ke_local[(3 * an + 2) * 56 + (3 * bn + 2)] +=
                    gp.weight * two_pi_gamma * a[2] * gp.tri[an] * gp.tri[bn];
            }
        }
        // flatten the 4×4 v-basis at this point
        let mut vb = [0.0; 16];
        let mut vdd = [0.0; 16];
        for c in 0..4 {
            for k in 0..4 {
                vb[4 * c + k] = gp.herm[c][k];
                vdd[4 * c + k] = gp.herm_dd[c][k];
            }
        }
        for alpha in 0..2 {
            let off = 24 + 16 * alpha;
            let cpl = gp.weight * two_pi_gamma * a[0];
            for p in 0..16 {
                for q in 0..16 {
                    ke_local[(off + p) * 56 + (off + q)] +=
                        cpl * vb[p] * vb[q] + gp.weight * bend_c * vdd[p] * vdd[q];
                }
                // cross terms −2·A₁₁·v_α·u_α folded symmetrically
                for bn in 0..8 {
                    let udof = 3 * bn + alpha;
                    let v = cpl * vb[p] * gp.tri[bn];
                    ke_local[(off + p) * 56 + udof] -= v;
                    ke_local[udof * 56 + (off + p)] -= v;
                }
            }
        }
        // A₁₁ u_α² part of the coupling
        for an in 0..8 {
            for bn in 0..8 {
                for alpha in 0..2 {
                    ke_local[(3 * an + alpha) * 56 + (3 * bn + alpha)] +=
                        gp.weight * two_pi_gamma * a[0] * gp.tri[an] * gp.tri[bn];
                }
            }
        }
    }

    let mut dofs = [0usize; 56];
    for (ei, ej, ek) in grid.elements() {
        let nodes = grid.element_nodes(ei, ej, ek);
        for (an, &node) in nodes.iter().enumerate() {
            for c in 0..3 {
                dofs[3 * an + c] = FLEX_DOFS * node + c;
            }
        }
        dofs[24..40].copy_from_slice(&flex_v_dofs(&nodes, 0));
        dofs[40..56].copy_from_slice(&flex_v_dofs(&nodes, 1));
        for p in 0..56 {
            for q in 0..56 {
                let v = ke_local[p * 56 + q];
                if v != 0.0 {
                    matrix.add(dofs[p], dofs[q], v);
                }
            }
        }
    }

    let mut rhs = vec![0.0; ndof];
    let gps = gauss_points(h);
    load_vector(grid, &gps, f, FLEX_DOFS, &mut rhs);
    let mut fixed = Vec::new();
    bulk_dirichlet(grid, opts, FLEX_DOFS, &mut fixed);
    for node in 0..n {
        if grid.is_gamma1(node) {
            fixed.push((FLEX_DOFS * node + 3, 0.0));
            fixed.push((FLEX_DOFS * node + 5, 0.0));
        }
    }
    matrix.eliminate_dirichlet(&fixed, &mut rhs);
    let sol = cg_jacobi(&matrix, &rhs, CG_TOL, default_max_iter(ndof))?;

    let mut state = LimitState::zeros(n);
    let mut flex = FlexionField { v: vec![[0.0; 2]; n], slope: vec![[0.0; 2]; n] };
    for node in 0..n {
        for c in 0..3 {
            state.u[node][c] = sol.x[FLEX_DOFS * node + c];
        }
        flex.v[node] = [sol.x[FLEX_DOFS * node + 3], sol.x[FLEX_DOFS * node + 5]];
        flex.slope[node] = [sol.x[FLEX_DOFS * node + 4], sol.x[FLEX_DOFS * node + 6]];
    }
    state.flexion = Some(flex);
    let energy = flexion_energy(&state, grid, base, gamma, e_1)?;
    let info = SolveInfo { iterations: sol.iterations, residual_norm: sol.relative_residual };
    Ok((state, energy, info))
}

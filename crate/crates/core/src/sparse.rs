//! Sparse symmetric linear algebra: CSR assembly and preconditioned
//! conjugate gradients.
//!
//! Patterns are built from element-dof cliques, frozen into CSR, and filled
//! by binary-searched scatter; Dirichlet conditions are imposed by symmetric
//! row/column elimination with right-hand-side correction, which keeps the
//! operator symmetric positive definite on the free dofs.

use crate::error::{Error, Result};

pub struct CsrBuilder {
    n: usize,
    rows: Vec<Vec<u32>>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, rows: vec![Vec::new(); n] }
    }

    /// Registers a dense interaction block among `dofs` (an element clique).
    pub fn add_clique(&mut self, dofs: &[usize]) {
        for &i in dofs {
            let row = &mut self.rows[i];
            for &j in dofs {
                row.push(j as u32);
            }
        }
    }

    pub fn finalize(mut self) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(self.n + 1);
        indptr.push(0usize);
        let mut indices = Vec::new();
        for row in &mut self.rows {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
            row.clear();
            row.shrink_to_fit();
        }
        let nnz = indices.len();
        CsrMatrix { n: self.n, indptr, indices, data: vec![0.0; nnz] }
    }
}

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Adds `v` to entry (i, j); the position must exist in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        let row = &self.indices[lo..hi];
        match row.binary_search(&(j as u32)) {
            Ok(pos) => self.data[lo + pos] += v,
            Err(_) => panic!("entry ({i}, {j}) not present in the sparsity pattern"),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&(j as u32)) {
            Ok(pos) => self.data[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for idx in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[idx] * x[self.indices[idx] as usize];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// xᵀ A y for the assembled quadratic form.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for idx in self.indptr[i]..self.indptr[i + 1] {
                row += self.data[idx] * y[self.indices[idx] as usize];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// Imposes x[i] = g_i for the listed dofs: symmetric row/column
    /// elimination with right-hand-side correction. `fixed` may carry
    /// nonzero boundary values.
    pub fn eliminate_dirichlet(&mut self, fixed: &[(usize, f64)], rhs: &mut [f64]) {
        let mut is_fixed = vec![false; self.n];
        let mut value = vec![0.0; self.n];
        for &(i, g) in fixed {
            is_fixed[i] = true;
            value[i] = g;
        }
        for i in 0..self.n {
            for idx in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[idx] as usize;
                if is_fixed[i] {
                    self.data[idx] = if i == j { 1.0 } else { 0.0 };
                } else if is_fixed[j] {
                    rhs[i] -= self.data[idx] * value[j];
                    self.data[idx] = 0.0;
                }
            }
        }
        for &(i, g) in fixed {
            rhs[i] = g;
        }
    }
}

/// Outcome of a converged conjugate-gradient solve.
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients. Converges on
/// ‖b − Ax‖ ≤ tol·‖b‖; a zero right-hand side returns the zero solution.
pub fn cg_jacobi(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution> {
    let n = a.n();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();

    for iter in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Solver {
                iterations: iter,
                relative_residual: f64::NAN,
                history_tail: history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = r_norm / b_norm;
        history.push(rel);
        if history.len() > 8 {
            history.remove(0);
        }
        if rel <= tol {
            return Ok(CgSolution { x, iterations: iter, relative_residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = *history.last().unwrap_or(&f64::NAN);
    Err(Error::Solver { iterations: max_iter, relative_residual: rel, history_tail: history })
}

/// Default iteration cap: 50·√ndof, at least 200.
pub fn default_max_iter(ndof: usize) -> usize {
    ((50.0 * (ndof as f64).sqrt()) as usize).max(200)
}

/// Default relative tolerance of the linear solves.
pub const CG_TOL: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = CsrBuilder::new(n);
        for i in 0..n - 1 {
            b.add_clique(&[i, i + 1]);
        }
        let mut m = b.finalize();
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
            }
        }
        m
    }

    #[test]
    fn pattern_and_scatter() {
        let m = laplacian_1d(5);
        assert_eq!(m.nnz(), 13);
        assert_eq!(m.get(2, 2), 2.0);
        assert_eq!(m.get(2, 1), -1.0);
        assert_eq!(m.get(2, 4), 0.0);
        let x = vec![1.0; 5];
        let mut y = vec![0.0; 5];
        m.matvec(&x, &mut y);
        assert_eq!(y, vec![1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cg_solves_laplacian() {
        // oracle: exact tridiagonal solve by forward/backward substitution
        let n = 40;
        let m = laplacian_1d(n);
        let b = vec![1.0; n];
        let sol = cg_jacobi(&m, &b, 1e-12, 10_000).unwrap();
        let mut residual = vec![0.0; n];
        m.matvec(&sol.x, &mut residual);
        for i in 0..n {
            assert_relative_eq!(residual[i], b[i], max_relative = 1e-8, epsilon = 1e-8);
        }
        // closed form: x_i = (i+1)(n - i)/2 for the unit load
        for i in 0..n {
            let exact = 0.5 * (i as f64 + 1.0) * (n - i) as f64;
            assert_relative_eq!(sol.x[i], exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn cg_zero_rhs() {
        let m = laplacian_1d(10);
        let sol = cg_jacobi(&m, &vec![0.0; 10], 1e-12, 100).unwrap();
        assert_eq!(sol.x, vec![0.0; 10]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn cg_iteration_cap_error() {
        let m = laplacian_1d(50);
        match cg_jacobi(&m, &vec![1.0; 50], 1e-14, 3) {
            Err(Error::Solver { iterations, history_tail, .. }) => {
                assert_eq!(iterations, 3);
                assert!(!history_tail.is_empty());
            }
            other => panic!("expected solver error, got {:?}", other.map(|s| s.iterations)),
        }
    }

    #[test]
    fn dirichlet_elimination_with_nonzero_values() {
        // solve -u'' = 0, u(0)=1, u(n+1)=3 on the interior: linear profile
        let n = 9;
        let m0 = laplacian_1d(n);
        let mut m = m0.clone();
        let mut rhs = vec![0.0; n];
        m.eliminate_dirichlet(&[(0, 1.0), (n - 1, 3.0)], &mut rhs);
        let sol = cg_jacobi(&m, &rhs, 1e-13, 1000).unwrap();
        assert_relative_eq!(sol.x[0], 1.0);
        assert_relative_eq!(sol.x[n - 1], 3.0);
        for i in 1..n - 1 {
            let exact = 1.0 + 2.0 * i as f64 / (n - 1) as f64;
            assert_relative_eq!(sol.x[i], exact, max_relative = 1e-9);
        }
        // symmetry preserved
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn quadratic_form_matches_matvec() {
        let m = laplacian_1d(6);
        let x: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let mut y = vec![0.0; 6];
        m.matvec(&x, &mut y);
        let direct: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert_relative_eq!(m.quadratic_form(&x, &x), direct, max_relative = 1e-14);
    }
}

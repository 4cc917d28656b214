//! Structured hexahedral grid on Ω = ω × (0, L), ω = (0, a) × (0, b).
//!
//! Node counts are inclusive (nx nodes ⇒ nx − 1 elements along x₁). The
//! clamped face Γ₁ is x₃ = 0, the top face Γ₂ is x₃ = L, the lateral
//! boundary Σ is the rest.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredGrid {
    pub a: f64,
    pub b: f64,
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl StructuredGrid {
    pub fn new(a: f64, b: f64, length: f64, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid box dimensions must be positive, got ({a}, {b}, {length})"
            )));
        }
        if nx < 2 || ny < 2 || nz < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 nodes per direction, got ({nx}, {ny}, {nz})"
            )));
        }
        Ok(Self { a, b, length, nx, ny, nz })
    }

    /// Same spacing h in every direction for a cube (a = b = L).
    pub fn cube(side: f64, n: usize) -> Result<Self> {
        Self::new(side, side, side, n, n, n)
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.a / (self.nx - 1) as f64,
            self.b / (self.ny - 1) as f64,
            self.length / (self.nz - 1) as f64,
        ]
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn n_elements(&self) -> usize {
        (self.nx - 1) * (self.ny - 1) * (self.nz - 1)
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    pub fn node_ijk(&self, node: usize) -> (usize, usize, usize) {
        let i = node % self.nx;
        let j = (node / self.nx) % self.ny;
        let k = node / (self.nx * self.ny);
        (i, j, k)
    }

    pub fn node_coords(&self, node: usize) -> [f64; 3] {
        let (i, j, k) = self.node_ijk(node);
        let h = self.spacing();
        [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]]
    }

    /// The eight corner nodes of element (ei, ej, ek) in the standard
    /// counter-clockwise-bottom-then-top ordering.
    pub fn element_nodes(&self, ei: usize, ej: usize, ek: usize) -> [usize; 8] {
        [
            self.node_index(ei, ej, ek),
            self.node_index(ei + 1, ej, ek),
            self.node_index(ei + 1, ej + 1, ek),
            self.node_index(ei, ej + 1, ek),
            self.node_index(ei, ej, ek + 1),
            self.node_index(ei + 1, ej, ek + 1),
            self.node_index(ei + 1, ej + 1, ek + 1),
            self.node_index(ei, ej + 1, ek + 1),
        ]
    }

    /// Iterates element index triples in lexicographic order.
    pub fn elements(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (ex, ey, ez) = (self.nx - 1, self.ny - 1, self.nz - 1);
        (0..ez).flat_map(move |ek| {
            (0..ey).flat_map(move |ej| (0..ex).map(move |ei| (ei, ej, ek)))
        })
    }

    pub fn element_center(&self, ei: usize, ej: usize, ek: usize) -> [f64; 3] {
        let h = self.spacing();
        [
            (ei as f64 + 0.5) * h[0],
            (ej as f64 + 0.5) * h[1],
            (ek as f64 + 0.5) * h[2],
        ]
    }

    pub fn is_gamma1(&self, node: usize) -> bool {
        self.node_ijk(node).2 == 0
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let (i, j, k) = self.node_ijk(node);
        i == 0 || j == 0 || k == 0 || i == self.nx - 1 || j == self.ny - 1 || k == self.nz - 1
    }

    pub fn volume(&self) -> f64 {
        self.a * self.b * self.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trip() {
        let g = StructuredGrid::new(1.0, 2.0, 3.0, 3, 4, 5).unwrap();
        assert_eq!(g.n_nodes(), 60);
        assert_eq!(g.n_elements(), 2 * 3 * 4);
        for node in 0..g.n_nodes() {
            let (i, j, k) = g.node_ijk(node);
            assert_eq!(g.node_index(i, j, k), node);
        }
        assert_eq!(g.node_coords(g.node_index(2, 3, 4)), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn boundary_classification() {
        let g = StructuredGrid::cube(1.0, 4).unwrap();
        let inner = g.node_index(1, 2, 2);
        assert!(!g.is_boundary(inner));
        assert!(g.is_gamma1(g.node_index(2, 2, 0)));
        assert!(!g.is_gamma1(inner));
        let n_gamma1 = (0..g.n_nodes()).filter(|&n| g.is_gamma1(n)).count();
        assert_eq!(n_gamma1, 16);
    }

    #[test]
    fn element_nodes_are_distinct_corners() {
        let g = StructuredGrid::cube(1.0, 3).unwrap();
        let nodes = g.element_nodes(1, 1, 1);
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
        assert_eq!(g.elements().count(), g.n_elements());
    }

    #[test]
    fn rejects_degenerate() {
        assert!(StructuredGrid::new(0.0, 1.0, 1.0, 2, 2, 2).is_err());
        assert!(StructuredGrid::new(1.0, 1.0, 1.0, 1, 2, 2).is_err());
    }
}

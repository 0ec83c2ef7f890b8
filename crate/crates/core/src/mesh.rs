//! Uniform bilinear quadrilateral mesh of the rescaled strip
//! `Ω = (0,L)×(−½,½)` with a 2×2 Gauss rule per element.
//!
//! Nodes are numbered column by column, `node = i·(ny+1) + j`, so that the
//! through-thickness index runs fastest and the stiffness bandwidth stays
//! proportional to `ny`.

use crate::error::{Error, Result};
use crate::tensor::Vec2;

const GAUSS: f64 = 0.577_350_269_189_625_8; // 1/√3

/// Shape-function data of one quadrature point of the reference element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    /// Offsets in (0,1) of the point inside the element, per direction.
    pub offset: (f64, f64),
    pub shape: [f64; 4],
    /// `∂N_a/∂x₁`, physical.
    pub d1: [f64; 4],
    /// `∂N_a/∂x₂` in rescaled coordinates (no `1/h` yet).
    pub d2: [f64; 4],
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripMesh {
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
    qps: [QuadPoint; 4],
}

impl StripMesh {
    pub fn new(length: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("strip length must be positive, got {length}")));
        }
        if nx < 4 || ny < 2 {
            return Err(Error::Config(format!(
                "strip mesh needs nx >= 4 and ny >= 2, got {nx}×{ny}"
            )));
        }
        let dx = length / nx as f64;
        let dy = 1.0 / ny as f64;
        let pts = [-GAUSS, GAUSS];
        // Local node order: (0,0), (1,0), (1,1), (0,1).
        let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        let mut qps = [QuadPoint {
            offset: (0.0, 0.0),
            shape: [0.0; 4],
            d1: [0.0; 4],
            d2: [0.0; 4],
            weight: 0.0,
        }; 4];
        for (qx, &xi) in pts.iter().enumerate() {
            for (qy, &eta) in pts.iter().enumerate() {
                let q = &mut qps[2 * qx + qy];
                q.offset = (0.5 * (1.0 + xi), 0.5 * (1.0 + eta));
                q.weight = 0.25 * dx * dy;
                for (a, &(sx, sy)) in signs.iter().enumerate() {
                    q.shape[a] = 0.25 * (1.0 + sx * xi) * (1.0 + sy * eta);
                    q.d1[a] = 0.25 * sx * (1.0 + sy * eta) * (2.0 / dx);
                    q.d2[a] = 0.25 * sy * (1.0 + sx * xi) * (2.0 / dy);
                }
            }
        }
        Ok(Self { length, nx, ny, qps })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    /// `(i, j)` of a node.
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node / (self.ny + 1), node % (self.ny + 1))
    }

    pub fn node_x1(&self, i: usize) -> f64 {
        if i == self.nx {
            self.length
        } else {
            i as f64 * self.dx()
        }
    }

    pub fn node_x2(&self, j: usize) -> f64 {
        if j == self.ny {
            0.5
        } else {
            -0.5 + j as f64 * self.dy()
        }
    }

    pub fn node_coords(&self, node: usize) -> Vec2 {
        let (i, j) = self.node_ij(node);
        Vec2::new(self.node_x1(i), self.node_x2(j))
    }

    /// `(i, j)` of the lower-left node of an element.
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e / self.ny, e % self.ny)
    }

    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.element_ij(e);
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    pub fn quad_points(&self) -> &[QuadPoint; 4] {
        &self.qps
    }

    /// Physical coordinates of quadrature point `q` of element `e`.
    pub fn qp_coords(&self, e: usize, q: usize) -> Vec2 {
        let (i, j) = self.element_ij(e);
        let (ox, oy) = self.qps[q].offset;
        Vec2::new(
            (i as f64 + ox) * self.dx(),
            -0.5 + (j as f64 + oy) * self.dy(),
        )
    }

    /// Number of Gauss columns (two per element column).
    pub fn num_gauss_columns(&self) -> usize {
        2 * self.nx
    }

    pub fn gauss_column_x1(&self, c: usize) -> f64 {
        let (i, qx) = (c / 2, c % 2);
        (i as f64 + self.qps[2 * qx].offset.0) * self.dx()
    }

    /// Gauss column of quadrature point `q` in element `e`.
    pub fn gauss_column(&self, e: usize, q: usize) -> usize {
        let (i, _) = self.element_ij(e);
        2 * i + q / 2
    }

    /// Total quadrature weight of one element.
    pub fn element_area(&self) -> f64 {
        self.qps.iter().map(|q| q.weight).sum()
    }

    /// Nodes on the clamped edge `x₁ = 0`.
    pub fn clamped_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.ny).map(move |j| self.node_index(0, j))
    }

    pub fn is_clamped(&self, node: usize) -> bool {
        node <= self.ny
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let m = StripMesh::new(1.0, 4, 2).unwrap();
        assert_eq!(m.num_elements(), 8);
        assert_eq!(m.num_nodes(), 15);
        assert_eq!(StripMesh::new(2.0, 128, 8).unwrap().num_elements(), 1024);
    }

    #[test]
    fn degenerate_dimensions_rejected() {
        assert!(StripMesh::new(0.0, 8, 4).is_err());
        assert!(StripMesh::new(1.0, 3, 4).is_err());
        assert!(StripMesh::new(1.0, 8, 1).is_err());
    }

    #[test]
    fn weights_sum_to_element_area() {
        let m = StripMesh::new(1.7, 10, 4).unwrap();
        let area = m.length / (m.nx * m.ny) as f64;
        assert!((m.element_area() - area).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_and_exact_gradients() {
        let m = StripMesh::new(2.0, 8, 4).unwrap();
        for q in m.quad_points() {
            let s: f64 = q.shape.iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            assert!(q.d1.iter().sum::<f64>().abs() < 1e-13);
            assert!(q.d2.iter().sum::<f64>().abs() < 1e-13);
        }
        // Linear fields are reproduced exactly.
        for e in [0, 5, m.num_elements() - 1] {
            let nodes = m.element_nodes(e);
            for (q, qp) in m.quad_points().iter().enumerate() {
                let mut grad = (0.0, 0.0);
                let mut val = 0.0;
                for a in 0..4 {
                    let x = m.node_coords(nodes[a]);
                    let f = 3.0 * x.x - 2.0 * x.y;
                    grad.0 += f * qp.d1[a];
                    grad.1 += f * qp.d2[a];
                    val += f * qp.shape[a];
                }
                let xq = m.qp_coords(e, q);
                assert!((val - (3.0 * xq.x - 2.0 * xq.y)).abs() < 1e-13);
                assert!((grad.0 - 3.0).abs() < 1e-12 && (grad.1 + 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn thickness_coordinates_are_symmetric() {
        let m = StripMesh::new(1.0, 4, 6).unwrap();
        for j in 0..=m.ny {
            assert!((m.node_x2(j) + m.node_x2(m.ny - j)).abs() < 1e-15);
        }
        assert_eq!(m.node_x1(m.nx), 1.0);
    }
}

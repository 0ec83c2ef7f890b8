//! Uniform node grids on rectangles `(0, (nx−1)δ₁) × (−(ny−1)δ₂/2, (ny−1)δ₂/2)`.

use crate::error::{Error, Result};

/// Samples at the nodes of a uniform grid, `components` values per node,
/// stored row-major: node `(i, j)` at `(j·nx + i)·components`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub components: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, components: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 || components == 0 {
            return Err(Error::Config(format!(
                "grid needs nx, ny >= 2 and at least one component, got {nx}×{ny}×{components}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::Config(format!("grid spacings must be positive, got ({dx}, {dy})")));
        }
        if values.len() != nx * ny * components {
            return Err(Error::Config(format!(
                "grid {nx}×{ny}×{components} needs {} values, got {}",
                nx * ny * components,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite grid value at index {k}")));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            components,
            values,
        })
    }

    /// Samples `f(x₁, x₂)` at the nodes.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        components: usize,
        mut f: impl FnMut(f64, f64) -> Vec<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny * components);
        let y0 = -0.5 * (ny - 1) as f64 * dy;
        for j in 0..ny {
            for i in 0..nx {
                let v = f(i as f64 * dx, y0 + j as f64 * dy);
                if v.len() != components {
                    return Err(Error::Config(format!(
                        "sample at node ({i}, {j}) has {} components, expected {components}",
                        v.len()
                    )));
                }
                values.extend(v);
            }
        }
        Self::new(nx, ny, dx, dy, components, values)
    }

    pub fn zeros(nx: usize, ny: usize, dx: f64, dy: f64, components: usize) -> Result<Self> {
        Self::new(nx, ny, dx, dy, components, vec![0.0; nx * ny * components])
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.values[self.node(i, j) * self.components + c]
    }

    pub fn length(&self) -> f64 {
        (self.nx - 1) as f64 * self.dx
    }

    pub fn height(&self) -> f64 {
        (self.ny - 1) as f64 * self.dy
    }

    /// `|∇u|` on the `(nx−1)×(ny−1)` cells from forward differences at the
    /// lower-left node, as a scalar cell-centred grid.
    pub fn gradient_magnitude(&self) -> GridFunction {
        let (cx, cy) = (self.nx - 1, self.ny - 1);
        let mut out = Vec::with_capacity(cx * cy);
        for j in 0..cy {
            for i in 0..cx {
                out.push(self.cell_gradient_sq(i, j).sqrt());
            }
        }
        GridFunction {
            nx: cx,
            ny: cy,
            dx: self.dx,
            dy: self.dy,
            components: 1,
            values: out,
        }
    }

    fn cell_gradient_sq(&self, i: usize, j: usize) -> f64 {
        (0..self.components)
            .map(|c| {
                let u = self.get(i, j, c);
                let d1 = (self.get(i + 1, j, c) - u) / self.dx;
                let d2 = (self.get(i, j + 1, c) - u) / self.dy;
                d1 * d1 + d2 * d2
            })
            .sum()
    }

    /// `∫|∇u|²` with the forward-difference gradient, one cell at a time.
    pub fn dirichlet_energy(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.ny - 1 {
            for i in 0..self.nx - 1 {
                acc += self.cell_gradient_sq(i, j);
            }
        }
        acc * self.dx * self.dy
    }

    /// `max |Δv| / δ` over all grid edges and components; this bounds every
    /// entry of the forward-difference gradient.
    pub fn gradient_sup(&self) -> f64 {
        let m = self.components;
        let mut worst = 0.0_f64;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.node(i, j) * m;
                for c in 0..m {
                    let u = self.values[k + c];
                    if i + 1 < self.nx {
                        worst = worst.max((self.values[k + m + c] - u).abs() / self.dx);
                    }
                    if j + 1 < self.ny {
                        worst = worst.max((self.values[k + self.nx * m + c] - u).abs() / self.dy);
                    }
                }
            }
        }
        worst
    }

    /// Trapezoid weight of node `(i, j)`; the weights sum to the area.
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.dx * self.dy
    }

    /// Trapezoid area of the nodes where `mask` holds.
    pub fn masked_area(&self, mask: &[bool]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if mask[self.node(i, j)] {
                    acc += self.node_weight(i, j);
                }
            }
        }
        acc
    }

    /// Nodes where `self` and `other` differ bitwise in some component.
    pub fn difference_mask(&self, other: &GridFunction) -> Vec<bool> {
        let m = self.components;
        (0..self.num_nodes())
            .map(|n| {
                self.values[n * m..(n + 1) * m]
                    .iter()
                    .zip(&other.values[n * m..(n + 1) * m])
                    .any(|(a, b)| a.to_bits() != b.to_bits())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_function_has_exact_gradient() {
        let u = GridFunction::from_fn(9, 5, 0.25, 0.1, 2, |x, y| vec![3.0 * x - 2.0 * y, 0.5 * y]).unwrap();
        let g = u.gradient_magnitude();
        let exact = (9.0f64 + 4.0 + 0.25).sqrt();
        assert!(g.values.iter().all(|v| (v - exact).abs() < 1e-12));
        assert!((u.dirichlet_energy() - exact * exact * u.length() * u.height()).abs() < 1e-10);
        assert!((u.gradient_sup() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_area() {
        let u = GridFunction::zeros(7, 4, 0.3, 0.05, 1).unwrap();
        let area = u.masked_area(&vec![true; u.num_nodes()]);
        assert!((area - u.length() * u.height()).abs() < 1e-14);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(GridFunction::new(1, 4, 0.1, 0.1, 1, vec![0.0; 4]).is_err());
        assert!(GridFunction::new(2, 2, 0.1, -0.1, 1, vec![0.0; 4]).is_err());
        assert!(GridFunction::new(2, 2, 0.1, 0.1, 1, vec![0.0; 3]).is_err());
        assert!(GridFunction::new(2, 2, 0.1, 0.1, 1, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}

//! Strain, stress and auxiliary fields of the rotation decomposition
//! `∇_h y = R^(h)(Id + hG^(h))`.

use crate::energy::{linearize, StoredEnergy};
use crate::error::{Error, Result};
use crate::mesh::StripMesh;
use crate::strip::DeformationField;
use crate::tensor::{rotation_matrix, Mat2, Vec2};

use super::flush;
use super::rotations::RotationProfile;

/// A 2×2 tensor per quadrature point, indexed `4e + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub mesh: StripMesh,
    pub values: Vec<Mat2>,
}

/// Zeroth and first `x₂`-moments per Gauss column.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub x1: Vec<f64>,
    /// `∫ F dx₂`.
    pub bar: Vec<Mat2>,
    /// `∫ x₂ F dx₂`.
    pub hat: Vec<Mat2>,
}

impl TensorField {
    pub fn from_fn(mesh: &StripMesh, mut f: impl FnMut(usize, usize) -> Result<Mat2>) -> Result<Self> {
        let mut values = Vec::with_capacity(4 * mesh.num_elements());
        for e in 0..mesh.num_elements() {
            for q in 0..4 {
                values.push(f(e, q)?);
            }
        }
        Ok(Self {
            mesh: mesh.clone(),
            values,
        })
    }

    pub fn at(&self, e: usize, q: usize) -> Mat2 {
        self.values[4 * e + q]
    }

    /// Moments with the assembly quadrature in `x₂`.
    pub fn moments(&self) -> Moments {
        let m = &self.mesh;
        let n = m.num_gauss_columns();
        let mut bar = vec![Mat2::ZERO; n];
        let mut hat = vec![Mat2::ZERO; n];
        let wy = 0.5 * m.dy();
        for e in 0..m.num_elements() {
            for q in 0..4 {
                let c = m.gauss_column(e, q);
                let x2 = m.qp_coords(e, q).y;
                let v = self.at(e, q);
                bar[c] += v * wy;
                hat[c] += v * (wy * x2);
            }
        }
        Moments {
            x1: (0..n).map(|c| m.gauss_column_x1(c)).collect(),
            bar,
            hat,
        }
    }

    /// `(∫|F|²)^{1/2}` over `Ω`.
    pub fn l2_norm(&self) -> f64 {
        self.integrate(|f| f.norm_sq()).sqrt()
    }

    /// `∫ φ(F)` over `Ω` by the assembly quadrature.
    pub fn integrate(&self, phi: impl Fn(&Mat2) -> f64) -> f64 {
        let w = self.mesh.quad_points()[0].weight;
        self.values.iter().map(|v| w * phi(v)).sum()
    }

    pub fn zip_map(&self, other: &TensorField, f: impl Fn(&Mat2, &Mat2) -> Mat2) -> TensorField {
        TensorField {
            mesh: self.mesh.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

/// Mollified angle and rate at every Gauss column.
pub fn column_rotations(mesh: &StripMesh, profile: &RotationProfile) -> Result<Vec<(f64, f64)>> {
    (0..mesh.num_gauss_columns())
        .map(|c| profile.angle_and_rate(mesh.gauss_column_x1(c)))
        .collect()
}

/// `G^(h) = h⁻¹((R^(h))ᵀ∇_h y − Id)` at every quadrature point.
///
/// Entries of `Rᵀ∇_h y − Id` at the rounding level of the difference
/// quotients forming `∇_h y` are flushed to zero before dividing by `h`.
pub fn strain_field(y: &DeformationField, profile: &RotationProfile) -> Result<TensorField> {
    let cols = column_rotations(&y.mesh, profile)?;
    let rounding = y.gradient_rounding_scale();
    TensorField::from_fn(&y.mesh, |e, q| {
        let f = y.scaled_gradient(e, q);
        let r = rotation_matrix(cols[y.mesh.gauss_column(e, q)].0);
        let d = r.transpose() * f - Mat2::IDENTITY;
        let scale = f.norm() + rounding;
        let d = Mat2::new(
            flush(d.a11, scale),
            flush(d.a12, scale),
            flush(d.a21, scale),
            flush(d.a22, scale),
        );
        Ok(d * (1.0 / y.h))
    })
}

/// `E^(h) = h⁻¹DW(Id + hG)` together with `𝓛G`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressFields {
    pub stress: TensorField,
    pub linear: TensorField,
}

pub fn stress_field(g: &TensorField, h: f64, w: &dyn StoredEnergy) -> Result<StressFields> {
    let lin = linearize(w)?;
    let stress = TensorField::from_fn(&g.mesh, |e, q| {
        let f = Mat2::IDENTITY + g.at(e, q) * h;
        if !(f.det() > 0.0) {
            return Err(Error::Diagnostic(format!(
                "det(Id + hG) = {:.3e} <= 0 at element {e}, quadrature point {q}",
                f.det()
            )));
        }
        Ok(w.stress(&f)? * (1.0 / h))
    })?;
    let linear = TensorField::from_fn(&g.mesh, |e, q| Ok(lin.apply(&g.at(e, q))))?;
    Ok(StressFields { stress, linear })
}

/// `z^(h) = y/h − h⁻¹∫₀^{x₁} R e₁ − x₂ R e₂` at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ZField {
    pub values: Vec<Vec2>,
    /// `max |z(0, x₂)|` over the clamped nodes.
    pub boundary_max: f64,
    /// `boundary_max / √h`.
    pub boundary_ratio: f64,
}

pub fn z_field(y: &DeformationField, profile: &RotationProfile) -> Result<ZField> {
    let m = &y.mesh;
    let angles: Vec<f64> = (0..=m.nx)
        .map(|i| profile.angle_and_rate(m.node_x1(i)).map(|(a, _)| a))
        .collect::<Result<_>>()?;
    // ∫₀^{x₁} (R e₁ − e₁) by the trapezoid rule; the x₁e₁ part is added exactly.
    let mut defect = vec![Vec2::ZERO; m.nx + 1];
    for i in 1..=m.nx {
        let dx = m.node_x1(i) - m.node_x1(i - 1);
        let t0 = Vec2::new(angles[i - 1].cos() - 1.0, angles[i - 1].sin());
        let t1 = Vec2::new(angles[i].cos() - 1.0, angles[i].sin());
        defect[i] = defect[i - 1] + (t0 + t1) * (0.5 * dx);
    }
    let values: Vec<Vec2> = (0..m.num_nodes())
        .map(|n| {
            let i = m.node_ij(n).0;
            let p = m.node_coords(n);
            let r = rotation_matrix(angles[i]);
            (y.y[n] - Vec2::new(p.x, 0.0) - defect[i] - r * Vec2::new(0.0, y.h * p.y)) * (1.0 / y.h)
        })
        .collect();
    let boundary_max = m.clamped_nodes().map(|n| values[n].norm()).fold(0.0, f64::max);
    Ok(ZField {
        boundary_max,
        boundary_ratio: boundary_max / y.h.sqrt(),
        values,
    })
}

/// Relative `L²` defect between the finite-element `∇_h z` and
/// `R(G + x₂θ′ e₁⊗e₁)` at the quadrature points.
pub fn z_identity_defect(
    y: &DeformationField,
    z: &ZField,
    profile: &RotationProfile,
    g: &TensorField,
) -> Result<f64> {
    let zf = DeformationField {
        mesh: y.mesh.clone(),
        h: y.h,
        y: z.values.clone(),
    };
    let cols = column_rotations(&y.mesh, profile)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for e in 0..y.mesh.num_elements() {
        for q in 0..4 {
            let (a, rate) = cols[y.mesh.gauss_column(e, q)];
            let x2 = y.mesh.qp_coords(e, q).y;
            let rhs = rotation_matrix(a) * (g.at(e, q) + Mat2::unit(0, 0) * (x2 * rate));
            num += (zf.scaled_gradient(e, q) - rhs).norm_sq();
            den += rhs.norm_sq();
        }
    }
    Ok((num / den.max(1e-300)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::rotations::{slab_rotations, smooth_rotations};
    use crate::energy::EnergyDensity;

    fn rigid_setup() -> (DeformationField, RotationProfile) {
        let mesh = StripMesh::new(1.0, 64, 4).unwrap();
        let y = DeformationField::rigid(&mesh, 0.1).unwrap();
        let p = smooth_rotations(&slab_rotations(&y).unwrap(), 0.1).unwrap();
        (y, p)
    }

    #[test]
    fn rigid_state_has_vanishing_fields() {
        let (y, p) = rigid_setup();
        let g = strain_field(&y, &p).unwrap();
        assert!(g.values.iter().all(|v| *v == Mat2::ZERO));
        let s = stress_field(&g, 0.1, &EnergyDensity::HalfDistSquared).unwrap();
        assert!(s.stress.values.iter().all(|v| *v == Mat2::ZERO));
        let z = z_field(&y, &p).unwrap();
        assert!(z.values.iter().all(|v| v.norm() < 1e-13));
        assert!(z.boundary_max < 1e-15);
    }

    #[test]
    fn prescribed_strain_is_recovered() {
        // ∇_h y = Id + hM for the affine map below; symmetric M keeps R ≡ Id.
        let mesh = StripMesh::new(1.0, 64, 4).unwrap();
        let h = 0.1;
        let m = Mat2::new(0.2, 0.1, 0.1, -0.3);
        let y: Vec<Vec2> = (0..mesh.num_nodes())
            .map(|n| {
                let x = mesh.node_coords(n);
                Vec2::new(
                    x.x * (1.0 + h * m.a11) + x.y * h * h * m.a12,
                    x.x * h * m.a21 + x.y * (h + h * h * m.a22),
                )
            })
            .collect();
        let field = DeformationField { mesh: mesh.clone(), h, y };
        let p = smooth_rotations(&slab_rotations(&field).unwrap(), h).unwrap();
        assert!(p.slab_angles.iter().all(|a| a.abs() < 1e-15));
        let g = strain_field(&field, &p).unwrap();
        for v in &g.values {
            assert!((*v - m).max_abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn moments_of_linear_field() {
        let mesh = StripMesh::new(1.0, 8, 4).unwrap();
        let m = Mat2::new(1.0, -2.0, 0.5, 3.0);
        let f = TensorField::from_fn(&mesh, |e, q| Ok(m * mesh.qp_coords(e, q).y)).unwrap();
        let mo = f.moments();
        for (b, h) in mo.bar.iter().zip(&mo.hat) {
            assert!(b.max_abs() < 1e-15);
            assert!((*h - m * (1.0 / 12.0)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn stress_of_zero_strain_vanishes() {
        let mesh = StripMesh::new(1.0, 8, 4).unwrap();
        let g = TensorField::from_fn(&mesh, |_, _| Ok(Mat2::ZERO)).unwrap();
        for w in [EnergyDensity::HalfDistSquared, EnergyDensity::IsotropicQuadratic { mu: 1.0, lambda: 2.0 }] {
            let s = stress_field(&g, 0.05, &w).unwrap();
            assert!(s.stress.values.iter().all(|v| *v == Mat2::ZERO));
        }
    }

    fn stress_gap(m: Mat2, w: &dyn StoredEnergy, h: f64) -> f64 {
        let mesh = StripMesh::new(1.0, 4, 2).unwrap();
        let g = TensorField::from_fn(&mesh, |_, _| Ok(m)).unwrap();
        let s = stress_field(&g, h, w).unwrap();
        (s.stress.values[0] - s.linear.values[0]).max_abs()
    }

    #[test]
    fn scaled_stress_tends_to_linearization() {
        let sym = Mat2::new(0.3, 0.2, 0.2, -0.1);
        let general = Mat2::new(0.3, 0.5, -0.1, -0.1);
        let iq = EnergyDensity::IsotropicQuadratic { mu: 1.0, lambda: 2.0 };
        let hd = EnergyDensity::HalfDistSquared;
        // A symmetric positive F is its own stretch, so DW(F) = F − Id exactly.
        for h in [0.1, 0.05, 0.025] {
            assert!(stress_gap(sym, &hd, h) < 1e-12);
        }
        for (m, w) in [(sym, &iq), (general, &hd), (general, &iq)] {
            let (e1, e2, e3) = (stress_gap(m, w, 0.1), stress_gap(m, w, 0.05), stress_gap(m, w, 0.025));
            assert!(e1 < 0.5 && (e1 / e2 - 2.0).abs() < 0.2 && (e2 / e3 - 2.0).abs() < 0.1, "{e1} {e2} {e3}");
        }
    }

    #[test]
    fn z_reproduces_axial_perturbation() {
        // y = rigid + h (φ(x₁), 0), R ≡ Id ⇒ z = (φ, 0).
        let mesh = StripMesh::new(1.0, 64, 4).unwrap();
        let h = 0.1;
        let phi = |x: f64| 0.01 * x * x;
        let y: Vec<Vec2> = (0..mesh.num_nodes())
            .map(|n| {
                let x = mesh.node_coords(n);
                Vec2::new(x.x + h * phi(x.x), h * x.y)
            })
            .collect();
        let field = DeformationField::from_values(&mesh, h, y).unwrap();
        let rigid = DeformationField::rigid(&mesh, h).unwrap();
        let p = smooth_rotations(&slab_rotations(&rigid).unwrap(), h).unwrap();
        let z = z_field(&field, &p).unwrap();
        for n in 0..mesh.num_nodes() {
            let x = mesh.node_coords(n);
            assert!((z.values[n] - Vec2::new(phi(x.x), 0.0)).norm() < 1e-14);
        }
    }
}

//! Residuals of the moment identities satisfied by strip equilibria.

use crate::error::Result;
use crate::load::LoadProfile;
use crate::strip::DeformationField;
use crate::tensor::{dist_so2, rotation_matrix, Mat2};

use super::fields::{column_rotations, TensorField};
use super::flush;
use super::rotations::RotationProfile;

/// Guards the divisions in the relative residuals.
pub const EPS: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub h: f64,
    /// `‖Ĝ₁₁ + θ′/12‖_{L²} / (‖θ′‖_{L²} + ε)`.
    pub r1: f64,
    /// `‖Ē e₁ + h Rᵀ g̃‖_{L²}`.
    pub r2: f64,
    /// `|Ê₁₁(L)|`.
    pub r3: f64,
    /// `‖E₁₂ − E₂₁‖_{L¹} / h`.
    pub r4: f64,
    /// `∫|∇_h y − R|² / max(∫dist²(∇_h y, SO(2)), ε)`, or 1 when both vanish;
    /// integrands at the rounding level of `|∇_h y|` count as zero.
    pub r5: f64,
}

impl IdentityResiduals {
    pub fn as_array(&self) -> [f64; 5] {
        [self.r1, self.r2, self.r3, self.r4, self.r5]
    }
}

pub fn identity_report(
    y: &DeformationField,
    profile: &RotationProfile,
    strain: &TensorField,
    stress: &TensorField,
    g: &LoadProfile,
) -> Result<IdentityResiduals> {
    let mesh = &y.mesh;
    let cols = column_rotations(mesh, profile)?;
    let wx = 0.5 * mesh.dx();
    let gm = strain.moments();
    let em = stress.moments();

    let mut num1 = 0.0;
    let mut den1 = 0.0;
    let mut acc2 = 0.0;
    for (c, &(angle, rate)) in cols.iter().enumerate() {
        num1 += wx * (gm.hat[c].a11 + rate / 12.0).powi(2);
        den1 += wx * rate * rate;
        let r = rotation_matrix(angle);
        let gt = g.tilde(mesh.length, gm.x1[c]);
        let v = em.bar[c].col(0) + r.transpose() * gt * y.h;
        acc2 += wx * v.dot(v);
    }
    let r1 = num1.sqrt() / (den1.sqrt() + EPS);
    let r2 = acc2.sqrt();

    // Linear extrapolation of Ê₁₁ from the last two Gauss columns to x₁ = L.
    let n = gm.x1.len();
    let (xa, xb) = (em.x1[n - 2], em.x1[n - 1]);
    let (fa, fb) = (em.hat[n - 2].a11, em.hat[n - 1].a11);
    let r3 = (fb + (fb - fa) * (mesh.length - xb) / (xb - xa)).abs();

    let r4 = stress.integrate(|e| (e.a12 - e.a21).abs()) / y.h;

    let w = mesh.quad_points()[0].weight;
    let rounding = y.gradient_rounding_scale();
    let mut num5 = 0.0;
    let mut den5 = 0.0;
    for e in 0..mesh.num_elements() {
        for q in 0..4 {
            let f = y.scaled_gradient(e, q);
            let r = rotation_matrix(cols[mesh.gauss_column(e, q)].0);
            let d = f - r;
            let scale = f.norm() + rounding;
            let d = Mat2::new(
                flush(d.a11, scale),
                flush(d.a12, scale),
                flush(d.a21, scale),
                flush(d.a22, scale),
            );
            num5 += w * d.norm_sq();
            den5 += w * flush(dist_so2(&f), scale).powi(2);
        }
    }
    let r5 = if num5 <= EPS && den5 <= EPS {
        1.0
    } else {
        num5 / den5.max(EPS)
    };
    Ok(IdentityResiduals {
        h: y.h,
        r1,
        r2,
        r3,
        r4,
        r5,
    })
}

//! Stored-energy densities on 2×2 matrices, their first and second
//! derivatives, and the linearization at the identity.

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::{dist_so2, Mat2, Vec2};

/// Step used by the finite-difference fallback for `D²W`.
const FD_STEP: f64 = 1e-6;

/// A frame-indifferent stored-energy density `W` on 2×2 matrices.
pub trait StoredEnergy: Send + Sync {
    fn name(&self) -> String;

    fn energy(&self, f: &Mat2) -> f64;

    /// First derivative `DW(F)`.
    fn stress(&self, f: &Mat2) -> Result<Mat2>;

    /// Directional second derivative `D²W(F)[H]`.
    ///
    /// The default falls back to central differences of [`StoredEnergy::stress`].
    fn stress_derivative(&self, f: &Mat2, dir: &Mat2) -> Result<Mat2> {
        let plus = self.stress(&(*f + *dir * FD_STEP))?;
        let minus = self.stress(&(*f - *dir * FD_STEP))?;
        Ok((plus - minus) * (0.5 / FD_STEP))
    }
}

/// The built-in densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyDensity {
    /// `W(F) = ½ dist²(F, SO(2))`.
    HalfDistSquared,
    /// `W(F) = μ|E|² + (λ/2)(tr E)²` with Green strain `E = (FᵀF − Id)/2`.
    ///
    /// Vanishes on reflections too, so it violates the coercivity
    /// hypothesis away from `det F > 0`; use it only near the identity.
    IsotropicQuadratic { mu: f64, lambda: f64 },
}

impl Default for EnergyDensity {
    fn default() -> Self {
        EnergyDensity::HalfDistSquared
    }
}

impl fmt::Display for EnergyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyDensity::HalfDistSquared => write!(f, "half-dist-squared"),
            EnergyDensity::IsotropicQuadratic { mu, lambda } => {
                write!(f, "isotropic-quadratic(mu={mu}, lambda={lambda})")
            }
        }
    }
}

impl EnergyDensity {
    pub fn isotropic_quadratic(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0) || !(lambda >= 0.0) || !mu.is_finite() || !lambda.is_finite() {
            return Err(Error::Config(format!(
                "isotropic-quadratic needs mu > 0 and lambda >= 0 (got mu={mu}, lambda={lambda})"
            )));
        }
        Ok(EnergyDensity::IsotropicQuadratic { mu, lambda })
    }

    /// Effective beam modulus in closed form.
    pub fn modulus_closed_form(&self) -> f64 {
        match *self {
            EnergyDensity::HalfDistSquared => 1.0,
            EnergyDensity::IsotropicQuadratic { mu, lambda } => {
                4.0 * mu * (mu + lambda) / (lambda + 2.0 * mu)
            }
        }
    }

    /// Hypotheses this density is known not to satisfy globally.
    pub fn documented_exceptions(&self) -> &'static [&'static str] {
        match self {
            EnergyDensity::HalfDistSquared => &[],
            EnergyDensity::IsotropicQuadratic { .. } => &["H3"],
        }
    }
}

fn green_strain(f: &Mat2) -> Mat2 {
    (f.transpose() * *f - Mat2::IDENTITY) * 0.5
}

/// `d/dα R(α) = R(α) J` with `J` the rotation by π/2.
const QUARTER_TURN: Mat2 = Mat2::new(0.0, -1.0, 1.0, 0.0);

impl StoredEnergy for EnergyDensity {
    fn name(&self) -> String {
        self.to_string()
    }

    fn energy(&self, f: &Mat2) -> f64 {
        match *self {
            EnergyDensity::HalfDistSquared => {
                let d = dist_so2(f);
                0.5 * d * d
            }
            EnergyDensity::IsotropicQuadratic { mu, lambda } => {
                let e = green_strain(f);
                let tr = e.trace();
                mu * e.norm_sq() + 0.5 * lambda * tr * tr
            }
        }
    }

    fn stress(&self, f: &Mat2) -> Result<Mat2> {
        match *self {
            EnergyDensity::HalfDistSquared => {
                let det = f.det();
                if !(det > 0.0) {
                    return Err(Error::Domain {
                        what: "DW of half-dist-squared needs det F > 0",
                        det,
                    });
                }
                let c = f.conformal_part();
                let r = c.norm();
                let rot = Mat2::new(c.x / r, -c.y / r, c.y / r, c.x / r);
                Ok(*f - rot)
            }
            EnergyDensity::IsotropicQuadratic { mu, lambda } => {
                let e = green_strain(f);
                let s = e * (2.0 * mu) + Mat2::IDENTITY * (lambda * e.trace());
                Ok(*f * s)
            }
        }
    }

    fn stress_derivative(&self, f: &Mat2, dir: &Mat2) -> Result<Mat2> {
        match *self {
            EnergyDensity::HalfDistSquared => {
                let det = f.det();
                if !(det > 0.0) {
                    return Err(Error::Domain {
                        what: "D²W of half-dist-squared needs det F > 0",
                        det,
                    });
                }
                // Π(F) = R(φ) with φ = atan2(c.y, c.x) on the conformal part c.
                let c = f.conformal_part();
                let dc = dir.conformal_part();
                let r2 = c.dot(c);
                let dphi = (c.x * dc.y - c.y * dc.x) / r2;
                let r = r2.sqrt();
                let rot = Mat2::new(c.x / r, -c.y / r, c.y / r, c.x / r);
                Ok(*dir - rot * QUARTER_TURN * dphi)
            }
            EnergyDensity::IsotropicQuadratic { mu, lambda } => {
                let e = green_strain(f);
                let s = e * (2.0 * mu) + Mat2::IDENTITY * (lambda * e.trace());
                let de = (f.transpose() * *dir).sym();
                let ds = de * (2.0 * mu) + Mat2::IDENTITY * (lambda * de.trace());
                Ok(*dir * s + *f * ds)
            }
        }
    }
}

/// Orthonormal basis of 2×2 matrices: `e₁⊗e₁`, `e₂⊗e₂`, the normalized
/// symmetric shear and the normalized skew part.
pub fn linearization_basis() -> [Mat2; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        Mat2::new(1.0, 0.0, 0.0, 0.0),
        Mat2::new(0.0, 0.0, 0.0, 1.0),
        Mat2::new(0.0, s, s, 0.0),
        Mat2::new(0.0, s, -s, 0.0),
    ]
}

/// `𝓛 = D²W(Id)` as a 4×4 array in [`linearization_basis`], together with
/// the beam modulus `E` defined by `E⁻¹ = 𝓛⁻¹(e₁⊗e₁) : (e₁⊗e₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub matrix: [[f64; 4]; 4],
    pub modulus: f64,
}

impl Linearization {
    pub fn apply(&self, g: &Mat2) -> Mat2 {
        let basis = linearization_basis();
        let coords: Vec<f64> = basis.iter().map(|b| b.ddot(g)).collect();
        let mut out = Mat2::ZERO;
        for (i, b) in basis.iter().enumerate() {
            let ci: f64 = (0..4).map(|j| self.matrix[i][j] * coords[j]).sum();
            out += *b * ci;
        }
        out
    }

    /// Smallest eigenvalue of the symmetric 3×3 block, i.e. the best `c`
    /// in `𝓛A : A ≥ c |sym A|²`.
    pub fn coercivity(&self) -> f64 {
        let m = self.sym_block();
        symmetric3_min_eigenvalue(&m)
    }

    pub fn sym_block(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = 0.5 * (self.matrix[i][j] + self.matrix[j][i]);
            }
        }
        m
    }
}

/// Computes `𝓛 = D²W(Id)` and the effective modulus.
pub fn linearize(w: &dyn StoredEnergy) -> Result<Linearization> {
    let basis = linearization_basis();
    let mut matrix = [[0.0; 4]; 4];
    for (j, bj) in basis.iter().enumerate() {
        let col = w.stress_derivative(&Mat2::IDENTITY, bj)?;
        for (i, bi) in basis.iter().enumerate() {
            matrix[i][j] = bi.ddot(&col);
        }
    }
    let mut block = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            block[i][j] = matrix[i][j];
        }
    }
    let s = solve3(&block, [1.0, 0.0, 0.0]).ok_or_else(|| {
        Error::Config(format!(
            "linearization of {} is singular on symmetric matrices",
            w.name()
        ))
    })?;
    let inv_modulus = s[0];
    if !(inv_modulus > 0.0) || !inv_modulus.is_finite() {
        return Err(Error::Config(format!(
            "linearization of {} gives a non-positive compliance {inv_modulus}",
            w.name()
        )));
    }
    Ok(Linearization {
        matrix,
        modulus: 1.0 / inv_modulus,
    })
}

/// `η(A) = DW(Id + A) − 𝓛A`.
pub fn taylor_remainder(w: &dyn StoredEnergy, lin: &Linearization, a: &Mat2) -> Result<Mat2> {
    Ok(w.stress(&(Mat2::IDENTITY + *a))? - lin.apply(a))
}

/// Gaussian elimination with partial pivoting on a 3×3 system.
fn solve3(m: &[[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = rhs[i];
    }
    let scale = m.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = a[i][3];
        for k in i + 1..3 {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Smallest eigenvalue of a symmetric 3×3 matrix (trigonometric formula).
fn symmetric3_min_eigenvalue(m: &[[f64; 3]; 3]) -> f64 {
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        return m[0][0].min(m[1][1]).min(m[2][2]);
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

/// Central finite difference of `W` in direction `dir`.
pub fn energy_directional_fd(w: &dyn StoredEnergy, f: &Mat2, dir: &Mat2, step: f64) -> f64 {
    (w.energy(&(*f + *dir * step)) - w.energy(&(*f - *dir * step))) / (2.0 * step)
}

/// Gradient of `W` at `F` by central differences on each entry.
pub fn energy_gradient_fd(w: &dyn StoredEnergy, f: &Mat2, step: f64) -> Mat2 {
    let mut g = Mat2::ZERO;
    for i in 0..2 {
        for j in 0..2 {
            g.set(i, j, energy_directional_fd(w, f, &Mat2::unit(i, j), step));
        }
    }
    g
}

/// Unit vector at angle `a`.
pub fn direction(a: f64) -> Vec2 {
    Vec2::new(a.cos(), a.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::rotation_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, spread: f64) -> Mat2 {
        Mat2::new(
            rng.gen_range(-spread..spread),
            rng.gen_range(-spread..spread),
            rng.gen_range(-spread..spread),
            rng.gen_range(-spread..spread),
        )
    }

    fn random_near_identity(rng: &mut ChaCha8Rng, min_det: f64) -> Mat2 {
        loop {
            let f = rotation_matrix(rng.gen_range(-3.0..3.0)) * (Mat2::IDENTITY + random_mat(rng, 0.6));
            if f.det() > min_det {
                return f;
            }
        }
    }

    const KINDS: [EnergyDensity; 3] = [
        EnergyDensity::HalfDistSquared,
        EnergyDensity::IsotropicQuadratic { mu: 1.0, lambda: 1.0 },
        EnergyDensity::IsotropicQuadratic { mu: 0.5, lambda: 0.0 },
    ];

    #[test]
    fn energy_vanishes_at_identity_and_rotations() {
        for w in KINDS {
            assert_eq!(w.energy(&Mat2::IDENTITY), 0.0);
            assert!(w.energy(&rotation_matrix(0.7)) < 1e-15);
            assert_eq!(w.stress(&Mat2::IDENTITY).unwrap(), Mat2::ZERO);
        }
    }

    #[test]
    fn isotropic_quadratic_uniaxial_leading_term() {
        let w = EnergyDensity::IsotropicQuadratic { mu: 1.0, lambda: 1.0 };
        let e = 1e-4;
        let val = w.energy(&Mat2::diag(1.0 + e, 1.0));
        assert!((val - 1.5e-8).abs() < 1e-11, "{val}");
    }

    #[test]
    fn half_dist_stress_small_stretch() {
        let e = 1e-3;
        let s = EnergyDensity::HalfDistSquared
            .stress(&Mat2::diag(1.0 + e, 1.0))
            .unwrap();
        assert!((s - Mat2::diag(e, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn half_dist_stress_domain_error() {
        let err = EnergyDensity::HalfDistSquared
            .stress(&Mat2::diag(1.0, -2.0))
            .unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        // The isotropic quadratic density is defined everywhere.
        assert!(EnergyDensity::IsotropicQuadratic { mu: 1.0, lambda: 1.0 }
            .stress(&Mat2::diag(1.0, -2.0))
            .is_ok());
    }

    #[test]
    fn stress_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for w in KINDS {
            for _ in 0..100 {
                let f = random_near_identity(&mut rng, 0.25);
                let exact = w.stress(&f).unwrap();
                let fd = energy_gradient_fd(&w, &f, 1e-5);
                let err = (exact - fd).norm();
                assert!(err <= 1e-6 * (exact.norm() + 1e-3), "{w}: {err:e} at {f}");
            }
        }
    }

    #[test]
    fn analytic_second_derivative_matches_fallback() {
        struct Fallback(EnergyDensity);
        impl StoredEnergy for Fallback {
            fn name(&self) -> String {
                "fallback".into()
            }
            fn energy(&self, f: &Mat2) -> f64 {
                self.0.energy(f)
            }
            fn stress(&self, f: &Mat2) -> Result<Mat2> {
                self.0.stress(f)
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in KINDS {
            let fb = Fallback(w);
            for _ in 0..50 {
                let f = random_near_identity(&mut rng, 0.25);
                let dir = random_mat(&mut rng, 1.0);
                let a = w.stress_derivative(&f, &dir).unwrap();
                let b = fb.stress_derivative(&f, &dir).unwrap();
                assert!((a - b).norm() <= 1e-6 * (a.norm() + 1e-3));
            }
        }
    }

    #[test]
    fn second_derivative_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for w in KINDS {
            for _ in 0..50 {
                let f = random_near_identity(&mut rng, 0.25);
                let a = random_mat(&mut rng, 1.0);
                let b = random_mat(&mut rng, 1.0);
                let ab = w.stress_derivative(&f, &a).unwrap().ddot(&b);
                let ba = w.stress_derivative(&f, &b).unwrap().ddot(&a);
                assert!((ab - ba).abs() < 1e-12 * (1.0 + ab.abs()));
            }
        }
    }

    #[test]
    fn modulus_values() {
        let lin = linearize(&EnergyDensity::HalfDistSquared).unwrap();
        assert!((lin.modulus - 1.0).abs() < 1e-14);
        let lin = linearize(&EnergyDensity::IsotropicQuadratic { mu: 1.0, lambda: 1.0 }).unwrap();
        assert!((lin.modulus - 8.0 / 3.0).abs() < 1e-13);
        let lin = linearize(&EnergyDensity::IsotropicQuadratic { mu: 0.5, lambda: 0.0 }).unwrap();
        assert!((lin.modulus - 1.0).abs() < 1e-14);
        for (mu, lambda) in [(0.3, 2.0), (2.0, 0.1), (1.0, 10.0)] {
            let w = EnergyDensity::IsotropicQuadratic { mu, lambda };
            let lin = linearize(&w).unwrap();
            assert!((lin.modulus - w.modulus_closed_form()).abs() < 1e-12 * lin.modulus);
        }
    }

    #[test]
    fn linearization_acts_on_symmetric_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for w in KINDS {
            let lin = linearize(&w).unwrap();
            for _ in 0..20 {
                let g = random_mat(&mut rng, 1.0);
                let lg = lin.apply(&g);
                assert!((lg - lin.apply(&g.sym())).max_abs() < 1e-12);
                assert!((lg - lg.transpose()).max_abs() < 1e-12);
            }
            assert!(lin.coercivity() > 0.0);
        }
        let lin = linearize(&EnergyDensity::HalfDistSquared).unwrap();
        let g = Mat2::new(0.3, -1.0, 2.0, 0.5);
        assert!((lin.apply(&g) - g.sym()).max_abs() < 1e-14);
        assert!((lin.coercivity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_linearization_is_a_config_error() {
        struct Flat;
        impl StoredEnergy for Flat {
            fn name(&self) -> String {
                "flat".into()
            }
            fn energy(&self, _: &Mat2) -> f64 {
                0.0
            }
            fn stress(&self, _: &Mat2) -> Result<Mat2> {
                Ok(Mat2::ZERO)
            }
        }
        assert!(matches!(linearize(&Flat), Err(Error::Config(_))));
    }

    #[test]
    fn taylor_remainder_is_superlinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for w in KINDS {
            let lin = linearize(&w).unwrap();
            assert_eq!(taylor_remainder(&w, &lin, &Mat2::ZERO).unwrap().max_abs(), 0.0);
            for _ in 0..20 {
                let mut a = random_mat(&mut rng, 1.0);
                a = a * (1.0 / a.norm());
                let mut prev = f64::INFINITY;
                for t in [1e-2, 1e-4, 1e-6] {
                    let ratio = taylor_remainder(&w, &lin, &(a * t)).unwrap().norm() / t;
                    assert!(ratio < prev || ratio < 1e-9);
                    assert!(ratio <= 10.0 * t + 1e-9, "{w}: ratio {ratio} at t={t}");
                    prev = ratio;
                }
            }
        }
    }

    #[test]
    fn taylor_remainder_skew_perturbation() {
        // Id + e·(e₁⊗e₂ − e₂⊗e₁) has polar factor R(−atan e) and stretch √(1+e²).
        let w = EnergyDensity::HalfDistSquared;
        let lin = linearize(&w).unwrap();
        let e = 1e-2;
        let a = Mat2::new(0.0, e, -e, 0.0);
        let eta = taylor_remainder(&w, &lin, &a).unwrap();
        let stretch = (1.0 + e * e).sqrt() - 1.0;
        let expected = rotation_matrix(-e.atan()) * stretch;
        assert!((eta - expected).max_abs() < 1e-15);
        assert!(eta.norm() <= 1e-4);
        assert!(eta.norm() / a.norm() <= e);
    }
}

//! Piecewise-constant slab rotations and their mollification.

use crate::error::{Error, Result};
use crate::strip::DeformationField;
use crate::tensor::{canonical_angle, polar_rotation, rotation_matrix, Mat2, Rotation2};

use super::flush;

/// The bump `η(s) = 30 s²(1−s)²` on `(0,1)`, unit mass.
pub fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// Primitive of [`bump`], `0` below `0` and `1` above `1`.
pub fn bump_mass(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Slab rotations `Q^(h)` and, once smoothed, the mollified angle `θ^(h)`
/// sampled at the node columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationProfile {
    pub h: f64,
    pub length: f64,
    /// `k + 1` slab boundaries from `0` to `L`.
    pub boundaries: Vec<f64>,
    /// Slab angles, unwrapped so that neighbours differ by at most `π`.
    pub slab_angles: Vec<f64>,
    /// Node-column abscissae.
    pub node_x: Vec<f64>,
    /// Mollified, projected and unwrapped angle per node column; empty until
    /// [`smooth_rotations`] has run.
    pub theta: Vec<f64>,
}

/// Number of slabs `k_h = ⌊L/h⌋`, so that the slab width lies in `[h, 2h)`.
pub fn slab_count(length: f64, h: f64) -> Result<usize> {
    let k = (length / h + 1e-9).floor() as usize;
    if k == 0 {
        return Err(Error::Diagnostic(format!(
            "thickness h = {h} exceeds the strip length {length}; no slab fits"
        )));
    }
    Ok(k)
}

/// Per slab, the nearest rotation to the slab mean of `∇_h y`, which
/// minimizes `∫_slab |∇_h y − Q|²` over constant rotations.
pub fn slab_rotations(y: &DeformationField) -> Result<RotationProfile> {
    let mesh = &y.mesh;
    let k = slab_count(mesh.length, y.h)?;
    let width = mesh.length / k as f64;
    let boundaries: Vec<f64> = (0..=k)
        .map(|j| if j == k { mesh.length } else { j as f64 * width })
        .collect();
    let mut sums = vec![Mat2::ZERO; k];
    let mut counts = vec![0usize; k];
    for e in 0..mesh.num_elements() {
        for q in 0..4 {
            let x1 = mesh.qp_coords(e, q).x;
            let j = ((x1 / width) as usize).min(k - 1);
            sums[j] += y.scaled_gradient(e, q);
            counts[j] += 1;
        }
    }
    let mut slab_angles = Vec::with_capacity(k);
    for j in 0..k {
        if counts[j] == 0 {
            return Err(Error::Diagnostic(format!("slab {j} contains no quadrature point")));
        }
        let mean = sums[j] * (1.0 / counts[j] as f64);
        let q = polar_rotation(&mean).map_err(|_| {
            Error::Diagnostic(format!("slab {j}: mean scaled gradient has det {:.3e} <= 0", mean.det()))
        })?;
        let a = flush(q.angle(), 1.0);
        let unwrapped = match slab_angles.last() {
            Some(&prev) => prev + canonical_angle(a - prev),
            None => a,
        };
        slab_angles.push(unwrapped);
    }
    let node_x = (0..=mesh.nx).map(|i| mesh.node_x1(i)).collect();
    Ok(RotationProfile {
        h: y.h,
        length: mesh.length,
        boundaries,
        slab_angles,
        node_x,
        theta: Vec::new(),
    })
}

impl RotationProfile {
    pub fn num_slabs(&self) -> usize {
        self.slab_angles.len()
    }

    pub fn slab_index(&self, x1: f64) -> usize {
        let k = self.num_slabs();
        let width = self.length / k as f64;
        ((x1.max(0.0) / width) as usize).min(k - 1)
    }

    /// `Q^(h)(x₁)`, extended constantly outside `[0, L]`.
    pub fn slab_rotation(&self, x1: f64) -> Rotation2 {
        Rotation2::new(self.slab_angles[self.slab_index(x1)])
    }

    /// Mollified angle and its derivative at `x₁`, mollifying with the
    /// one-sided kernel `∫₀^h η_h(s) Q(x₁ − s) ds`.
    ///
    /// The mollified matrix is conformal, `ρ R(φ)`, so the projection onto
    /// SO(2) is `R(φ)` and `θ′ = (c s′ − s c′)/(c² + s²)` exactly.
    pub fn angle_and_rate(&self, x1: f64) -> Result<(f64, f64)> {
        let k = self.num_slabs();
        // (slab, weight, weight derivative) for the slabs met by the kernel support.
        let mut terms = Vec::new();
        for j in 0..k {
            let lo = if j == 0 { f64::NEG_INFINITY } else { self.boundaries[j] };
            let hi = if j + 1 == k { f64::INFINITY } else { self.boundaries[j + 1] };
            // Mass of η_h over s with x₁ − s ∈ (lo, hi).
            let w = bump_mass((x1 - lo) / self.h) - bump_mass((x1 - hi) / self.h);
            let dw = (bump((x1 - lo) / self.h) - bump((x1 - hi) / self.h)) / self.h;
            if w != 0.0 || dw != 0.0 {
                terms.push((j, w, dw));
            }
        }
        // Angles are taken relative to the heaviest slab, so a single
        // contributing slab reproduces its angle exactly.
        let reference = terms
            .iter()
            .fold((self.slab_index(x1), 0.0), |best, &(j, w, _)| if w > best.1 { (j, w) } else { best })
            .0;
        let reference = self.slab_angles[reference];
        let (mut c, mut s, mut dc, mut ds) = (0.0, 0.0, 0.0, 0.0);
        for &(j, w, dw) in &terms {
            let (sn, cs) = (self.slab_angles[j] - reference).sin_cos();
            c += w * cs;
            s += w * sn;
            dc += dw * cs;
            ds += dw * sn;
        }
        let m = Mat2::new(c, -s, s, c);
        let r = polar_rotation(&m).map_err(|_| {
            Error::Diagnostic(format!("mollified rotation at x1 = {x1} is degenerate (det {:.3e})", m.det()))
        })?;
        let angle = reference + r.angle();
        let rate = (c * ds - s * dc) / (c * c + s * s);
        Ok((angle, rate))
    }

    /// `R^(h)(x₁)`.
    pub fn rotation(&self, x1: f64) -> Result<Mat2> {
        Ok(rotation_matrix(self.angle_and_rate(x1)?.0))
    }

    pub fn is_smoothed(&self) -> bool {
        !self.theta.is_empty()
    }

    /// `‖R^(h) − Q^(h)‖_{L²(0,L)}` by a two-point Gauss rule on each node
    /// interval, refined four times.
    pub fn smoothing_gap(&self) -> Result<f64> {
        let mut acc = 0.0;
        let g = 0.5 / 3f64.sqrt();
        for w in self.node_x.windows(2) {
            let sub = (w[1] - w[0]) / 4.0;
            for k in 0..4 {
                let mid = w[0] + (k as f64 + 0.5) * sub;
                for x in [mid - g * sub, mid + g * sub] {
                    let d = self.rotation(x)? - self.slab_rotation(x).matrix();
                    acc += 0.5 * sub * d.norm_sq();
                }
            }
        }
        Ok(acc.sqrt())
    }
}

/// Mollifies the slab rotations with `η_h` and records the projected,
/// unwrapped angle at every node column.
pub fn smooth_rotations(profile: &RotationProfile, h: f64) -> Result<RotationProfile> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("mollification width must be positive, got {h}")));
    }
    let mut out = profile.clone();
    out.h = h;
    let mut theta = Vec::with_capacity(out.node_x.len());
    for &x in &out.node_x {
        let (a, _) = out.angle_and_rate(x)?;
        let unwrapped = match theta.last() {
            Some(&prev) => prev + canonical_angle(a - prev),
            None => a,
        };
        theta.push(unwrapped);
    }
    out.theta = theta;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::StripMesh;
    use crate::tensor::Vec2;

    #[test]
    fn bump_has_unit_mass() {
        let n = 10_000;
        let mass: f64 = (0..n).map(|i| bump((i as f64 + 0.5) / n as f64) / n as f64).sum();
        assert!((mass - 1.0).abs() < 1e-8);
        assert_eq!(bump_mass(1.0), 1.0);
        assert!((bump_mass(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slab_widths_lie_in_range() {
        for (l, h) in [(1.0, 0.2), (1.0, 0.025), (1.7, 0.3), (2.0, 0.15)] {
            let k = slab_count(l, h).unwrap();
            let w = l / k as f64;
            assert!(w >= h - 1e-12 && w < 2.0 * h, "{l} {h} {w}");
        }
        assert!(slab_count(1.0, 2.0).is_err());
    }

    #[test]
    fn rigid_state_has_identity_rotations() {
        let mesh = StripMesh::new(1.0, 64, 4).unwrap();
        let y = DeformationField::rigid(&mesh, 0.1).unwrap();
        let p = smooth_rotations(&slab_rotations(&y).unwrap(), 0.1).unwrap();
        assert!(p.slab_angles.iter().all(|&a| a == 0.0));
        assert!(p.theta.iter().all(|&a| a == 0.0));
        assert_eq!(p.angle_and_rate(0.37).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rotated_rigid_state_has_constant_rotation() {
        let mesh = StripMesh::new(1.0, 64, 4).unwrap();
        for alpha in [0.4, 3.0, -2.5] {
            let y = DeformationField::rotated_rigid(&mesh, 0.1, alpha).unwrap();
            let p = smooth_rotations(&slab_rotations(&y).unwrap(), 0.1).unwrap();
            for (&a, &t) in p.slab_angles.iter().zip(&p.theta) {
                assert!((a - alpha).abs() < 1e-12 && (t - alpha).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recovers_slab_means_of_a_synthetic_rotation_field() {
        // ∇_h y = R(α(x₁))(Id + 1e−4 N) with y built by integrating R e₁
        // along x₁ and adding h x₂ R e₂ plus small noise.
        let mesh = StripMesh::new(1.0, 160, 8).unwrap();
        let h = 0.1;
        let alpha = |x: f64| 0.3 * x + 0.2 * (3.0 * x).sin();
        let n_int = 20;
        let mut y = Vec::with_capacity(mesh.num_nodes());
        let mut noise = 0.123_f64;
        for node in 0..mesh.num_nodes() {
            let x = mesh.node_coords(node);
            let mut mid = Vec2::ZERO;
            for k in 0..n_int * 160 {
                let s = (k as f64 + 0.5) * x.x / (n_int * 160) as f64;
                mid += Vec2::new(alpha(s).cos(), alpha(s).sin()) * (x.x / (n_int * 160) as f64);
            }
            noise = (noise * 997.0 + 0.311).fract();
            let r = rotation_matrix(alpha(x.x));
            y.push(mid + r * Vec2::new(0.0, h * x.y) + Vec2::new(1e-4 * h * (noise - 0.5), 0.0) * mesh.dx());
        }
        let field = DeformationField::from_values(&mesh, h, y).unwrap();
        let p = slab_rotations(&field).unwrap();
        for j in 0..p.num_slabs() {
            let (a, b) = (p.boundaries[j], p.boundaries[j + 1]);
            let n = 1000;
            let mean = (0..n).map(|i| alpha(a + (i as f64 + 0.5) * (b - a) / n as f64)).sum::<f64>() / n as f64;
            assert!((p.slab_angles[j] - mean).abs() < 1e-3, "{j}: {} vs {mean}", p.slab_angles[j]);
        }
    }

    fn step_profile(delta: f64, h: f64) -> RotationProfile {
        let node_x: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
        let k = slab_count(1.0, h).unwrap();
        let boundaries = (0..=k).map(|j| j as f64 / k as f64).collect();
        let slab_angles = (0..k).map(|j| if j < k / 2 { 0.0 } else { delta }).collect();
        RotationProfile {
            h,
            length: 1.0,
            boundaries,
            slab_angles,
            node_x,
            theta: Vec::new(),
        }
    }

    #[test]
    fn constant_rotation_is_unchanged() {
        let mut p = step_profile(0.0, 0.1);
        p.slab_angles.iter_mut().for_each(|a| *a = 0.8);
        let s = smooth_rotations(&p, 0.1).unwrap();
        assert!(s.theta.iter().all(|&t| (t - 0.8).abs() < 1e-15));
    }

    #[test]
    fn step_transition_is_monotone_and_narrow() {
        let h = 0.1;
        let p = smooth_rotations(&step_profile(1e-2, h), h).unwrap();
        let jump = 0.5;
        for (w, t) in p.node_x.windows(2).zip(p.theta.windows(2)) {
            assert!(t[1] >= t[0] - 1e-16);
            if w[1] <= jump || w[0] >= jump + h {
                assert!((t[1] - t[0]).abs() < 1e-16, "{w:?} {t:?}");
            }
        }
        assert!(p.theta[0].abs() < 1e-16 && (p.theta[400] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn rate_matches_difference_quotient() {
        let mut p = step_profile(0.0, 0.125);
        p.slab_angles = vec![0.0, 0.3, -0.2, 0.5, 1.0, 0.9, 0.1, 0.0];
        for x in [0.13, 0.3, 0.55, 0.71, 0.99] {
            let t = 1e-6;
            let fd = (p.angle_and_rate(x + t).unwrap().0 - p.angle_and_rate(x - t).unwrap().0) / (2.0 * t);
            let (_, r) = p.angle_and_rate(x).unwrap();
            assert!((fd - r).abs() < 1e-6 * r.abs().max(1.0), "{x}: {fd} {r}");
        }
    }
}

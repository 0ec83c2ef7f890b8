//! Per-thickness error tables against the elastica limit.

use rayon::prelude::*;

use crate::elastica::ElasticaSolution;
use crate::energy::StoredEnergy;
use crate::error::{Error, Result};
use crate::load::LoadProfile;
use crate::strip::DeformationField;
use crate::tensor::{Mat2, Vec2};

use super::fields::column_rotations;
use super::identities::IdentityResiduals;
use super::rotations::RotationProfile;
use super::{analyze, Diagnostics};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// `‖θ^(h) − θ‖_{L²(0,L)}`.
    pub theta_err_l2: f64,
    /// `‖y^(h) − ȳ‖_{W^{1,2}(Ω)}` with `ȳ` extended constantly in `x₂`.
    pub y_err_w12: f64,
    /// `∫W(∇_h y) / h²`.
    pub energy_over_h2: f64,
    pub identities: IdentityResiduals,
    /// `‖G^(h)‖_{L²}`.
    pub strain_l2: f64,
    /// `‖R^(h) − Q^(h)‖_{L²(0,L)}`.
    pub rotation_gap: f64,
    /// `‖E^(h) − 𝓛G^(h)‖_{L¹} / ‖G^(h)‖_{L²}`, zero when `G^(h)` vanishes.
    pub stress_gap: f64,
    /// `sup |θ^(h)|` over the nodes.
    pub theta_sup: f64,
    /// `sup |θ^(h) − mean θ^(h)|²`.
    pub interp_lhs: f64,
    /// `2‖θ^(h)‖_{L²}‖(θ^(h))′‖_{L²}`.
    pub interp_rhs: f64,
    /// `max |z^(h)(0,·)| / √h`.
    pub z_boundary_ratio: f64,
}

impl ConvergenceRow {
    pub fn is_finite(&self) -> bool {
        [
            self.theta_err_l2,
            self.y_err_w12,
            self.energy_over_h2,
            self.strain_l2,
            self.rotation_gap,
            self.stress_gap,
            self.theta_sup,
            self.interp_lhs,
            self.interp_rhs,
            self.z_boundary_ratio,
        ]
        .iter()
        .chain(self.identities.as_array().iter())
        .all(|v| v.is_finite())
    }
}

/// Rows sorted by decreasing `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn column(&self, f: impl Fn(&ConvergenceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Sample points and weights of a two-point Gauss rule on four
/// subintervals of every node interval.
fn fine_rule(node_x: &[f64]) -> Vec<(f64, f64)> {
    let g = 0.5 / 3f64.sqrt();
    let mut out = Vec::with_capacity(8 * node_x.len());
    for w in node_x.windows(2) {
        let sub = (w[1] - w[0]) / 4.0;
        for k in 0..4 {
            let mid = w[0] + (k as f64 + 0.5) * sub;
            out.push((mid - g * sub, 0.5 * sub));
            out.push((mid + g * sub, 0.5 * sub));
        }
    }
    out
}

/// Both sides of `sup|f − f̄|² ≤ 2‖f‖_{L²}‖f′‖_{L²}` for `f = θ^(h)`.
pub fn interpolation_check(profile: &RotationProfile) -> Result<(f64, f64)> {
    let rule = fine_rule(&profile.node_x);
    let samples: Vec<(f64, f64, f64)> = rule
        .iter()
        .map(|&(x, w)| profile.angle_and_rate(x).map(|(a, r)| (a, r, w)))
        .collect::<Result<_>>()?;
    // Angles are continuous in x₁; re-anchor the branch at the first sample.
    let mut unwrapped = Vec::with_capacity(samples.len());
    for &(a, _, _) in &samples {
        let v = match unwrapped.last() {
            Some(&prev) => prev + crate::tensor::canonical_angle(a - prev),
            None => a,
        };
        unwrapped.push(v);
    }
    let length: f64 = samples.iter().map(|s| s.2).sum();
    let mean = unwrapped.iter().zip(&samples).map(|(f, s)| f * s.2).sum::<f64>() / length;
    let f2: f64 = unwrapped.iter().zip(&samples).map(|(f, s)| f * f * s.2).sum();
    let df2: f64 = samples.iter().map(|s| s.1 * s.1 * s.2).sum();
    let lhs = unwrapped.iter().fold(0.0_f64, |m, f| m.max((f - mean).powi(2)));
    Ok((lhs, 2.0 * f2.sqrt() * df2.sqrt()))
}

fn row(y: &DeformationField, d: &Diagnostics, limit: &ElasticaSolution, w: &dyn StoredEnergy) -> Result<ConvergenceRow> {
    let mesh = &y.mesh;
    let cols = column_rotations(mesh, &d.profile)?;
    let wx = 0.5 * mesh.dx();
    let theta_err_l2 = cols
        .iter()
        .enumerate()
        .map(|(c, &(a, _))| wx * (a - limit.theta_at(mesh.gauss_column_x1(c))).powi(2))
        .sum::<f64>()
        .sqrt();

    let qw = mesh.quad_points()[0].weight;
    let mut acc = 0.0;
    for e in 0..mesh.num_elements() {
        for q in 0..4 {
            let x1 = mesh.qp_coords(e, q).x;
            let f = y.scaled_gradient(e, q);
            let t = limit.theta_at(x1);
            let dv = y.value_at_qp(e, q) - limit.ybar_at(x1);
            let d1 = f.col(0) - Vec2::new(t.cos(), t.sin());
            let d2 = f.col(1) * y.h;
            acc += qw * (dv.dot(dv) + d1.dot(d1) + d2.dot(d2));
        }
    }
    let y_err_w12 = acc.sqrt();

    // W(∇_h y) = W(Id + hG) by frame indifference; the flushed G makes
    // rigid states exactly energy free.
    let elastic = d.strain.integrate(|m| w.energy(&(Mat2::IDENTITY + *m * y.h)));
    let strain_l2 = d.strain.l2_norm();
    let stress_gap = if strain_l2 == 0.0 {
        0.0
    } else {
        d.stress
            .zip_map(&d.linear_stress, |a, b| *a - *b)
            .integrate(|m| m.norm())
            / strain_l2
    };
    let (interp_lhs, interp_rhs) = interpolation_check(&d.profile)?;
    Ok(ConvergenceRow {
        h: y.h,
        theta_err_l2,
        y_err_w12,
        energy_over_h2: elastic / (y.h * y.h),
        identities: d.identities,
        strain_l2,
        rotation_gap: d.profile.smoothing_gap()?,
        stress_gap,
        theta_sup: d.profile.theta.iter().fold(0.0_f64, |m, t| m.max(t.abs())),
        interp_lhs,
        interp_rhs,
        z_boundary_ratio: d.z.boundary_ratio,
    })
}

/// One row per solution, computed concurrently and sorted by decreasing `h`.
pub fn convergence_study(
    solutions: &[DeformationField],
    limit: &ElasticaSolution,
    g: &LoadProfile,
    w: &dyn StoredEnergy,
) -> Result<ConvergenceTable> {
    for y in solutions {
        if (y.mesh.length - limit.length).abs() > 1e-12 * limit.length {
            return Err(Error::Config(format!(
                "strip length {} does not match the limit length {}",
                y.mesh.length, limit.length
            )));
        }
    }
    g.validate(limit.length)?;
    let mut rows: Vec<ConvergenceRow> = solutions
        .par_iter()
        .map(|y| {
            let d = analyze(y, g, w)?;
            row(y, &d, limit, w)
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| b.h.total_cmp(&a.h));
    if let Some(bad) = rows.iter().find(|r| !r.is_finite()) {
        return Err(Error::Diagnostic(format!("non-finite entry in the row for h = {}", bad.h)));
    }
    Ok(ConvergenceTable { rows })
}

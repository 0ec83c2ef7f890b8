//! Stationary points of the rescaled strip energy
//! `J^h(y) = ∫_Ω W(∇_h y) − h² g·y` with the clamp `y(0,x₂) = (0, h x₂)`.
//!
//! The mesh never depends on `h`; thickness enters through the scaled
//! gradient `∇_h y = (∂₁y, h⁻¹∂₂y)` and the boundary data only.

use rayon::prelude::*;

use crate::energy::StoredEnergy;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, BandCholesky, CsrMatrix};
use crate::load::LoadProfile;
use crate::mesh::{QuadPoint, StripMesh};
use crate::tensor::{rotation_matrix, Mat2, Vec2};

/// Quadrature points with `det ∇_h y` at or below this value reject a step.
pub const DET_GUARD: f64 = 0.1;

/// Nodal deformation of the strip at thickness `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    pub mesh: StripMesh,
    pub h: f64,
    pub y: Vec<Vec2>,
}

fn check_thickness(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::Config(format!("thickness h must lie in (0, 0.5], got {h}")));
    }
    Ok(())
}

impl DeformationField {
    /// The undeformed state `y = (x₁, h x₂)`.
    pub fn rigid(mesh: &StripMesh, h: f64) -> Result<Self> {
        Self::rotated_rigid(mesh, h, 0.0)
    }

    /// `R(α)(x₁, h x₂)`; violates the clamp unless `α = 0`.
    pub fn rotated_rigid(mesh: &StripMesh, h: f64, alpha: f64) -> Result<Self> {
        check_thickness(h)?;
        let r = rotation_matrix(alpha);
        let y = (0..mesh.num_nodes())
            .map(|n| {
                let x = mesh.node_coords(n);
                r * Vec2::new(x.x, h * x.y)
            })
            .collect();
        Ok(Self {
            mesh: mesh.clone(),
            h,
            y,
        })
    }

    /// Wraps nodal values; the clamp is re-imposed.
    pub fn from_values(mesh: &StripMesh, h: f64, y: Vec<Vec2>) -> Result<Self> {
        check_thickness(h)?;
        if y.len() != mesh.num_nodes() {
            return Err(Error::Config(format!(
                "expected {} nodal values, got {}",
                mesh.num_nodes(),
                y.len()
            )));
        }
        let mut field = Self {
            mesh: mesh.clone(),
            h,
            y,
        };
        field.enforce_clamp();
        Ok(field)
    }

    pub fn clamp_value(&self, node: usize) -> Vec2 {
        Vec2::new(0.0, self.h * self.mesh.node_coords(node).y)
    }

    pub fn enforce_clamp(&mut self) {
        for j in 0..=self.mesh.ny {
            let n = self.mesh.node_index(0, j);
            self.y[n] = self.clamp_value(n);
        }
    }

    /// `max |y − y_clamp|` over the clamped nodes.
    pub fn clamp_defect(&self) -> f64 {
        self.mesh
            .clamped_nodes()
            .map(|n| (self.y[n] - self.clamp_value(n)).norm())
            .fold(0.0, f64::max)
    }

    fn element_values(&self, e: usize) -> [Vec2; 4] {
        self.mesh.element_nodes(e).map(|n| self.y[n])
    }

    /// `∇_h y` at quadrature point `q` of element `e`.
    pub fn scaled_gradient(&self, e: usize, q: usize) -> Mat2 {
        scaled_gradient(&self.element_values(e), &self.mesh.quad_points()[q], self.h)
    }

    /// `y` at quadrature point `q` of element `e`.
    pub fn value_at_qp(&self, e: usize, q: usize) -> Vec2 {
        let qp = &self.mesh.quad_points()[q];
        self.element_values(e)
            .iter()
            .zip(qp.shape)
            .fold(Vec2::ZERO, |acc, (v, n)| acc + *v * n)
    }

    /// Bilinear interpolation of `y` at a point of `Ω̄`.
    pub fn eval(&self, x1: f64, x2: f64) -> Vec2 {
        let m = &self.mesh;
        let s = (x1 / m.dx()).clamp(0.0, m.nx as f64);
        let t = ((x2 + 0.5) / m.dy()).clamp(0.0, m.ny as f64);
        let i = (s.floor() as usize).min(m.nx - 1);
        let j = (t.floor() as usize).min(m.ny - 1);
        let (u, v) = (s - i as f64, t - j as f64);
        self.y[m.node_index(i, j)] * ((1.0 - u) * (1.0 - v))
            + self.y[m.node_index(i + 1, j)] * (u * (1.0 - v))
            + self.y[m.node_index(i + 1, j + 1)] * (u * v)
            + self.y[m.node_index(i, j + 1)] * ((1.0 - u) * v)
    }

    /// Warm start for a new mesh and thickness: nodal interpolation, the
    /// through-thickness offset from the midline rescaled by `h_new/h`, and
    /// the clamp re-imposed.
    pub fn transfer(&self, mesh: &StripMesh, h_new: f64) -> Result<Self> {
        check_thickness(h_new)?;
        if (mesh.length - self.mesh.length).abs() > 1e-12 * mesh.length {
            return Err(Error::Config(format!(
                "cannot transfer between strips of length {} and {}",
                self.mesh.length, mesh.length
            )));
        }
        let ratio = h_new / self.h;
        let y = (0..mesh.num_nodes())
            .map(|n| {
                let x = mesh.node_coords(n);
                let mid = self.eval(x.x, 0.0);
                mid + (self.eval(x.x, x.y) - mid) * ratio
            })
            .collect();
        Self::from_values(mesh, h_new, y)
    }

    /// Adds `t·d` to the nodal values (`d` flattened as `[y₁, y₂]` per node).
    pub fn perturbed(&self, d: &[f64], t: f64) -> Self {
        let mut out = self.clone();
        for (n, v) in out.y.iter_mut().enumerate() {
            v.x += t * d[2 * n];
            v.y += t * d[2 * n + 1];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.y.iter().fold(0.0_f64, |m, v| m.max(v.x.abs()).max(v.y.abs()))
    }

    /// Magnitude whose rounding bounds the rounding of `∇_h y`:
    /// nodal values carry `eps·|y|∞`, amplified by the smallest spacing.
    pub fn gradient_rounding_scale(&self) -> f64 {
        let spacing = self.mesh.dx().min(self.h * self.mesh.dy());
        self.max_abs() / spacing
    }

    /// Smallest `det ∇_h y` over all quadrature points with its location.
    pub fn min_det(&self) -> (f64, usize, usize) {
        let mut worst = (f64::INFINITY, 0, 0);
        for e in 0..self.mesh.num_elements() {
            for q in 0..4 {
                let d = self.scaled_gradient(e, q).det();
                if d < worst.0 {
                    worst = (d, e, q);
                }
            }
        }
        worst
    }
}

fn basis_gradient(qp: &QuadPoint, a: usize, h: f64) -> (f64, f64) {
    (qp.d1[a], qp.d2[a] / h)
}

/// Formed from edge differences of the nodal values, so states that are
/// affine along an edge give exact gradients.
fn scaled_gradient(vals: &[Vec2; 4], qp: &QuadPoint, h: f64) -> Mat2 {
    // d1[0] = −d1[1], d1[3] = −d1[2], d2[0] = −d2[3], d2[1] = −d2[2].
    let c1 = (vals[1] - vals[0]) * qp.d1[1] + (vals[2] - vals[3]) * qp.d1[2];
    let c2 = ((vals[3] - vals[0]) * qp.d2[3] + (vals[2] - vals[1]) * qp.d2[2]) * (1.0 / h);
    Mat2::from_cols(c1, c2)
}

fn guarded_gradient(y: &DeformationField, vals: &[Vec2; 4], e: usize, q: usize) -> Result<Mat2> {
    let f = scaled_gradient(vals, &y.mesh.quad_points()[q], y.h);
    let det = f.det();
    if !(det > DET_GUARD) {
        return Err(Error::Guard { element: e, qp: q, det });
    }
    Ok(f)
}

fn element_residual(
    y: &DeformationField,
    g: &LoadProfile,
    w: &dyn StoredEnergy,
    e: usize,
) -> Result<[f64; 8]> {
    let vals = y.element_values(e);
    let h2 = y.h * y.h;
    let mut out = [0.0; 8];
    for (q, qp) in y.mesh.quad_points().iter().enumerate() {
        let f = guarded_gradient(y, &vals, e, q)?;
        let s = w.stress(&f)?;
        let load = g.eval(y.mesh.qp_coords(e, q).x);
        for a in 0..4 {
            let (b1, b2) = basis_gradient(qp, a, y.h);
            out[2 * a] += qp.weight * (s.a11 * b1 + s.a12 * b2 - h2 * load.x * qp.shape[a]);
            out[2 * a + 1] += qp.weight * (s.a21 * b1 + s.a22 * b2 - h2 * load.y * qp.shape[a]);
        }
    }
    Ok(out)
}

fn element_tangent(y: &DeformationField, w: &dyn StoredEnergy, e: usize) -> Result<[[f64; 8]; 8]> {
    let vals = y.element_values(e);
    let mut k = [[0.0; 8]; 8];
    for (q, qp) in y.mesh.quad_points().iter().enumerate() {
        let f = guarded_gradient(y, &vals, e, q)?;
        let grads: [(f64, f64); 4] = std::array::from_fn(|a| basis_gradient(qp, a, y.h));
        for b in 0..4 {
            for d in 0..2 {
                let mut dir = Mat2::ZERO;
                dir.set(d, 0, grads[b].0);
                dir.set(d, 1, grads[b].1);
                let ds = w.stress_derivative(&f, &dir)?;
                for (a, &(b1, b2)) in grads.iter().enumerate() {
                    k[2 * a][2 * b + d] += qp.weight * (ds.a11 * b1 + ds.a12 * b2);
                    k[2 * a + 1][2 * b + d] += qp.weight * (ds.a21 * b1 + ds.a22 * b2);
                }
            }
        }
    }
    Ok(k)
}

fn first_error<T: Send>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

fn assemble_residual(
    y: &DeformationField,
    g: &LoadProfile,
    w: &dyn StoredEnergy,
    clamp: bool,
) -> Result<Vec<f64>> {
    let locals = first_error(
        (0..y.mesh.num_elements())
            .into_par_iter()
            .map(|e| element_residual(y, g, w, e))
            .collect(),
    )?;
    let mut r = vec![0.0; 2 * y.mesh.num_nodes()];
    for (e, local) in locals.iter().enumerate() {
        for (a, n) in y.mesh.element_nodes(e).iter().enumerate() {
            r[2 * n] += local[2 * a];
            r[2 * n + 1] += local[2 * a + 1];
        }
    }
    if clamp {
        for n in y.mesh.clamped_nodes() {
            r[2 * n] = 0.0;
            r[2 * n + 1] = 0.0;
        }
    }
    Ok(r)
}

/// Discrete weak-form residual `∫ DW(∇_h y):∇_h ψ − h² g·ψ` for every nodal
/// test function, with the clamped rows zeroed.
pub fn residual(y: &DeformationField, g: &LoadProfile, w: &dyn StoredEnergy) -> Result<Vec<f64>> {
    assemble_residual(y, g, w, true)
}

/// As [`residual`] but with the clamped edge released.
pub fn residual_unclamped(
    y: &DeformationField,
    g: &LoadProfile,
    w: &dyn StoredEnergy,
) -> Result<Vec<f64>> {
    assemble_residual(y, g, w, false)
}

/// Derivative of [`residual`]; clamped rows and columns are replaced by the
/// identity, which keeps the matrix symmetric.
pub fn tangent(y: &DeformationField, w: &dyn StoredEnergy) -> Result<CsrMatrix> {
    let locals = first_error(
        (0..y.mesh.num_elements())
            .into_par_iter()
            .map(|e| element_tangent(y, w, e))
            .collect(),
    )?;
    let clamped = |dof: usize| y.mesh.is_clamped(dof / 2);
    let mut triplets = Vec::with_capacity(64 * locals.len() + 2 * (y.mesh.ny + 1));
    for (e, k) in locals.iter().enumerate() {
        let nodes = y.mesh.element_nodes(e);
        let dofs: [usize; 8] = std::array::from_fn(|i| 2 * nodes[i / 2] + i % 2);
        for (i, &r) in dofs.iter().enumerate() {
            if clamped(r) {
                continue;
            }
            for (j, &c) in dofs.iter().enumerate() {
                if !clamped(c) {
                    triplets.push((r, c, k[i][j]));
                }
            }
        }
    }
    for n in y.mesh.clamped_nodes() {
        triplets.push((2 * n, 2 * n, 1.0));
        triplets.push((2 * n + 1, 2 * n + 1, 1.0));
    }
    Ok(CsrMatrix::from_triplets(2 * y.mesh.num_nodes(), &triplets))
}

/// `(∫W(∇_h y), ∫W(∇_h y) − h² ∫g·y)` by the assembly quadrature.
pub fn scaled_energy(y: &DeformationField, g: &LoadProfile, w: &dyn StoredEnergy) -> (f64, f64) {
    let h2 = y.h * y.h;
    let parts: Vec<(f64, f64)> = (0..y.mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let vals = y.element_values(e);
            let mut el = 0.0;
            let mut work = 0.0;
            for (q, qp) in y.mesh.quad_points().iter().enumerate() {
                el += qp.weight * w.energy(&scaled_gradient(&vals, qp, y.h));
                let yq = vals.iter().zip(qp.shape).fold(Vec2::ZERO, |acc, (v, n)| acc + *v * n);
                work += qp.weight * g.eval(y.mesh.qp_coords(e, q).x).dot(yq);
            }
            (el, work)
        })
        .collect();
    let (elastic, work) = parts
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    (elastic, elastic - h2 * work)
}

/// Nodal load vector `h² ∫ g ψ` (unclamped).
fn load_vector(y: &DeformationField, g: &LoadProfile) -> Vec<f64> {
    let h2 = y.h * y.h;
    let mut f = vec![0.0; 2 * y.mesh.num_nodes()];
    for e in 0..y.mesh.num_elements() {
        let nodes = y.mesh.element_nodes(e);
        for (q, qp) in y.mesh.quad_points().iter().enumerate() {
            let load = g.eval(y.mesh.qp_coords(e, q).x);
            for (a, &n) in nodes.iter().enumerate() {
                f[2 * n] += h2 * qp.weight * load.x * qp.shape[a];
                f[2 * n + 1] += h2 * qp.weight * load.y * qp.shape[a];
            }
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Absolute bound on the sup norm of the residual.
    pub newton_tol: f64,
    /// Residual bound relative to the sup norm of the nodal load vector.
    pub rel_tol: f64,
    /// Newton increments below `step_tol·max(1, |y|∞)` also count as converged.
    pub step_tol: f64,
    pub max_iters: usize,
    pub load_steps: usize,
    pub min_load_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            rel_tol: 1e-9,
            step_tol: 1e-13,
            max_iters: 50,
            load_steps: 10,
            min_load_step: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) || !(self.rel_tol > 0.0) || !(self.step_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.load_steps == 0 {
            return Err(Error::Config("solver.max_iters and solver.load_steps must be positive".into()));
        }
        if !(self.min_load_step > 0.0 && self.min_load_step <= 1.0) {
            return Err(Error::Config("minimal load step must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// One accepted continuation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStep {
    /// Load factor in (0, 1], or the thickness for a warm-started stage.
    pub parameter: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub path: Vec<ContinuationStep>,
    pub elastic: f64,
    pub total: f64,
    pub warm_started: bool,
}

enum NewtonOutcome {
    Converged { iterations: usize, residual: f64 },
    Failed { iterations: usize, residual: f64, guard: Option<Error> },
}

fn factor_with_shift(k: &CsrMatrix) -> Result<BandCholesky> {
    match BandCholesky::factor(k, 0.0) {
        Ok(c) => Ok(c),
        Err(first) => {
            let scale = k.max_abs();
            let mut shift = 1e-10 * scale;
            while shift <= scale {
                if let Ok(c) = BandCholesky::factor(k, shift) {
                    return Ok(c);
                }
                shift *= 10.0;
            }
            Err(first)
        }
    }
}

fn newton(
    y: &mut DeformationField,
    g: &LoadProfile,
    w: &dyn StoredEnergy,
    cfg: &SolverConfig,
    force_scale: f64,
) -> NewtonOutcome {
    let mut last_step = f64::INFINITY;
    let mut r = match residual(y, g, w) {
        Ok(r) => r,
        Err(e) => {
            return NewtonOutcome::Failed {
                iterations: 0,
                residual: f64::INFINITY,
                guard: Some(e),
            }
        }
    };
    for it in 0..=cfg.max_iters {
        let nr = norm_inf(&r);
        let small_step = last_step <= cfg.step_tol * y.max_abs().max(1.0);
        // Without load the relative test is void and the absolute one decides.
        let relative = force_scale == 0.0 || nr <= cfg.rel_tol * force_scale;
        if nr == 0.0 || (nr <= cfg.newton_tol && (relative || small_step)) {
            return NewtonOutcome::Converged {
                iterations: it,
                residual: nr,
            };
        }
        if it == cfg.max_iters {
            return NewtonOutcome::Failed {
                iterations: it,
                residual: nr,
                guard: None,
            };
        }
        let step = tangent(y, w).and_then(|k| factor_with_shift(&k)).map(|c| {
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            c.solve(&rhs)
        });
        let d = match step {
            Ok(d) => d,
            Err(e) => {
                return NewtonOutcome::Failed {
                    iterations: it,
                    residual: nr,
                    guard: Some(e),
                }
            }
        };
        let (_, e0) = scaled_energy(y, g, w);
        let slope = dot(&r, &d);
        let mut alpha = 1.0;
        let mut guard = None;
        let accepted = loop {
            if alpha < 1e-10 {
                break None;
            }
            let trial = y.perturbed(&d, alpha);
            let (det, element, qp) = trial.min_det();
            if !(det > DET_GUARD) {
                guard = Some(Error::Guard { element, qp, det });
                alpha *= 0.5;
                continue;
            }
            let (_, et) = scaled_energy(&trial, g, w);
            let armijo = et <= e0 + 1e-4 * alpha * slope;
            let roundoff = (et - e0).abs() <= 1e-12 * e0.abs().max(1e-300) + 1e-15 * alpha * slope.abs();
            if armijo || roundoff {
                if let Ok(rt) = residual(&trial, g, w) {
                    if armijo || norm_inf(&rt) < nr {
                        break Some((trial, rt));
                    }
                }
            }
            alpha *= 0.5;
        };
        match accepted {
            Some((trial, rt)) => {
                last_step = alpha * norm_inf(&d);
                *y = trial;
                r = rt;
            }
            None => {
                return NewtonOutcome::Failed {
                    iterations: it + 1,
                    residual: nr,
                    guard,
                }
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Newton iteration with load continuation from the rigid state, or from
/// `warm` when given (falling back to the ramp if the warm start fails).
pub fn solve_stationary(
    mesh: &StripMesh,
    h: f64,
    g: &LoadProfile,
    w: &dyn StoredEnergy,
    cfg: &SolverConfig,
    warm: Option<&DeformationField>,
) -> Result<(DeformationField, SolverReport)> {
    check_thickness(h)?;
    cfg.validate()?;
    g.validate(mesh.length)?;
    let rigid = DeformationField::rigid(mesh, h)?;
    let force_scale = norm_inf(&load_vector(&rigid, g));
    let mut path = Vec::new();
    let mut total_iters = 0;

    let finish = |y: DeformationField, converged: bool, iterations: usize, res: f64, path, warm_started| {
        let (elastic, total) = scaled_energy(&y, g, w);
        (
            y,
            SolverReport {
                converged,
                iterations,
                residual: res,
                path,
                elastic,
                total,
                warm_started,
            },
        )
    };

    if let Some(prev) = warm {
        let mut y = prev.transfer(mesh, h)?;
        match newton(&mut y, g, w, cfg, force_scale) {
            NewtonOutcome::Converged { iterations, residual } => {
                path.push(ContinuationStep {
                    parameter: h,
                    iterations,
                });
                return Ok(finish(y, true, iterations, residual, path, true));
            }
            NewtonOutcome::Failed { iterations, .. } => total_iters += iterations,
        }
    }

    let mut y = rigid;
    if g.is_zero() {
        let outcome = newton(&mut y, g, w, cfg, force_scale);
        return match outcome {
            NewtonOutcome::Converged { iterations, residual } => {
                path.push(ContinuationStep {
                    parameter: 1.0,
                    iterations,
                });
                Ok(finish(y, true, total_iters + iterations, residual, path, false))
            }
            NewtonOutcome::Failed { iterations, residual, guard } => match guard {
                Some(e @ Error::Guard { .. }) => Err(e),
                _ => Ok(finish(y, false, total_iters + iterations, residual, path, false)),
            },
        };
    }

    let mut factor = 0.0;
    let mut step = 1.0 / cfg.load_steps as f64;
    let mut last_residual = f64::INFINITY;
    while factor < 1.0 {
        let target = (factor + step).min(1.0);
        let mut trial = y.clone();
        match newton(&mut trial, &g.scaled(target), w, cfg, target * force_scale) {
            NewtonOutcome::Converged { iterations, residual } => {
                total_iters += iterations;
                path.push(ContinuationStep {
                    parameter: target,
                    iterations,
                });
                y = trial;
                factor = target;
                last_residual = residual;
            }
            NewtonOutcome::Failed { iterations, residual, guard } => {
                total_iters += iterations;
                step *= 0.5;
                if step < cfg.min_load_step {
                    return match guard {
                        Some(e @ Error::Guard { .. }) => Err(e),
                        _ => Ok(finish(y, false, total_iters, residual, path, false)),
                    };
                }
            }
        }
    }
    Ok(finish(y, true, total_iters, last_residual, path, false))
}

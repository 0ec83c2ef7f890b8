//! The limit elastica in tangent-angle form,
//! `−(E/12)θ″ + g̃·(−sin θ, cos θ) = 0`, `θ(0) = 0`, `θ′(L) = 0`,
//! with `g̃(x₁) = ∫_L^{x₁} g`.
//!
//! Two independent discretizations are provided: finite differences of the
//! Euler–Lagrange equation with a ghost node at `x₁ = L`, and direct
//! minimization of a discretized `J₂`. For large loads the equation has
//! several solutions; both routines follow the branch connected to `θ ≡ 0`.

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::load::LoadProfile;
use crate::tensor::Vec2;

/// `g̃` sampled on the uniform grid `x_i = iL/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedLoad {
    pub x: Vec<f64>,
    pub values: Vec<Vec2>,
}

fn grid(length: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == n { length } else { i as f64 * length / n as f64 })
        .collect()
}

/// Trapezoid integration of `g` backward from `L`; `g̃(L) = 0` exactly.
pub fn gtilde(g: &LoadProfile, length: f64, n: usize) -> Result<TiltedLoad> {
    if n < 8 {
        return Err(Error::Config(format!("g̃ needs n >= 8 samples, got {n}")));
    }
    if !(length > 0.0) {
        return Err(Error::Config(format!("length must be positive, got {length}")));
    }
    let x = grid(length, n);
    let mut values = vec![Vec2::ZERO; n + 1];
    for i in (0..n).rev() {
        let dx = x[i + 1] - x[i];
        values[i] = values[i + 1] - (g.eval(x[i]) + g.eval(x[i + 1])) * (0.5 * dx);
    }
    Ok(TiltedLoad { x, values })
}

/// Linearized cantilever under `g = (0, −γ)`:
/// `θ(x) = (12γ/E)(Lx²/2 − x³/6 − L²x/2)`.
pub fn linear_cantilever_theta(gamma: f64, modulus: f64, length: f64, x: f64) -> f64 {
    12.0 * gamma / modulus * (length * x * x / 2.0 - x * x * x / 6.0 - length * length * x / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticaSolution {
    pub length: f64,
    pub modulus: f64,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub ybar: Vec<Vec2>,
    pub j2: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl ElasticaSolution {
    /// Builds curvature, midline and energy from an angle profile.
    pub fn from_theta(length: f64, modulus: f64, theta: Vec<f64>, g: &LoadProfile) -> Self {
        let n = theta.len() - 1;
        let mut sol = Self {
            length,
            modulus,
            x: grid(length, n),
            kappa: curvature(&theta, length / n as f64),
            theta,
            ybar: Vec::new(),
            j2: 0.0,
            residual: 0.0,
            iterations: 0,
        };
        reconstruct_midline(&mut sol);
        sol.j2 = j2_eval(&sol, g, modulus);
        sol
    }

    pub fn n(&self) -> usize {
        self.theta.len() - 1
    }

    fn locate(&self, x1: f64) -> (usize, f64) {
        let n = self.n();
        let s = (x1 / self.length * n as f64).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        (i, s - i as f64)
    }

    /// Piecewise linear interpolation of `θ`.
    pub fn theta_at(&self, x1: f64) -> f64 {
        let (i, t) = self.locate(x1);
        self.theta[i] * (1.0 - t) + self.theta[i + 1] * t
    }

    pub fn ybar_at(&self, x1: f64) -> Vec2 {
        let (i, t) = self.locate(x1);
        self.ybar[i] * (1.0 - t) + self.ybar[i + 1] * t
    }

    pub fn tip_angle(&self) -> f64 {
        self.theta[self.n()]
    }
}

/// `θ′` by centred differences, one-sided second order at `x₁ = 0`, and the
/// ghost-node value `0` at `x₁ = L`.
fn curvature(theta: &[f64], dx: f64) -> Vec<f64> {
    let n = theta.len() - 1;
    let mut k = vec![0.0; n + 1];
    k[0] = (-3.0 * theta[0] + 4.0 * theta[1] - theta[2]) / (2.0 * dx);
    for i in 1..n {
        k[i] = (theta[i + 1] - theta[i - 1]) / (2.0 * dx);
    }
    k
}

/// `ȳ(x₁) = ∫₀^{x₁} (cos θ, sin θ)` by the trapezoid rule.
pub fn reconstruct_midline(sol: &mut ElasticaSolution) {
    let mut y = vec![Vec2::ZERO; sol.theta.len()];
    for i in 1..y.len() {
        let dx = sol.x[i] - sol.x[i - 1];
        let (s0, c0) = sol.theta[i - 1].sin_cos();
        let (s1, c1) = sol.theta[i].sin_cos();
        y[i] = y[i - 1] + Vec2::new(c0 + c1, s0 + s1) * (0.5 * dx);
    }
    sol.ybar = y;
}

/// `J₂ = ∫₀^L (E/24)κ² − g·ȳ` by the trapezoid rule.
pub fn j2_eval(sol: &ElasticaSolution, g: &LoadProfile, modulus: f64) -> f64 {
    let n = sol.n();
    let mut acc = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 } * (sol.x[n] / n as f64);
        acc += w * (modulus / 24.0 * sol.kappa[i] * sol.kappa[i] - g.eval(sol.x[i]).dot(sol.ybar[i]));
    }
    acc
}

fn check_inputs(modulus: f64, length: f64, n: usize, min_n: usize) -> Result<()> {
    if !(modulus > 0.0) || !modulus.is_finite() {
        return Err(Error::Config(format!("modulus E must be positive, got {modulus}")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Config(format!("length must be positive, got {length}")));
    }
    if n < min_n {
        return Err(Error::Config(format!("elastica grid needs n >= {min_n}, got {n}")));
    }
    Ok(())
}

/// Residual of the finite-difference equations for `θ_1..θ_n`.
fn fd_residual(theta: &[f64], gt: &[Vec2], bend: f64) -> Vec<f64> {
    let n = theta.len() - 1;
    (1..=n)
        .map(|i| {
            let next = if i == n { theta[n - 1] } else { theta[i + 1] };
            let (s, c) = theta[i].sin_cos();
            -bend * (next - 2.0 * theta[i] + theta[i - 1]) + gt[i].dot(Vec2::new(-s, c))
        })
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped Newton for the finite-difference system at fixed `g̃`.
fn fd_newton(theta: &mut [f64], gt: &[Vec2], bend: f64, tol: f64, max_iters: usize) -> Result<(f64, usize)> {
    let n = theta.len() - 1;
    let mut r = fd_residual(theta, gt, bend);
    let mut norm = sup(&r);
    for it in 0..max_iters {
        if norm <= tol {
            return Ok((norm, it));
        }
        let mut sub = vec![-bend; n];
        let sup_d = vec![-bend; n];
        let diag: Vec<f64> = (1..=n)
            .map(|i| {
                let (s, c) = theta[i].sin_cos();
                2.0 * bend + gt[i].dot(Vec2::new(-c, -s))
            })
            .collect();
        sub[n - 1] = -2.0 * bend;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = solve_tridiagonal(&sub, &diag, &sup_d, &rhs)?;
        let mut alpha = 1.0;
        loop {
            let mut trial = theta.to_vec();
            for i in 1..=n {
                trial[i] += alpha * d[i - 1];
            }
            let rt = fd_residual(&trial, gt, bend);
            let nt = sup(&rt);
            let step = alpha * sup(&d);
            if nt < (1.0 - 1e-4 * alpha) * norm || step <= 1e-15 * sup(theta).max(1.0) {
                theta.copy_from_slice(&trial);
                r = rt;
                let stagnated = step <= 1e-15 * sup(theta).max(1.0);
                norm = nt;
                if stagnated {
                    // Roundoff floor of the second difference reached.
                    return Ok((norm, it + 1));
                }
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: norm,
                    context: "elastica Newton line search stalled".into(),
                });
            }
        }
    }
    if norm <= tol {
        return Ok((norm, max_iters));
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual: norm,
        context: "elastica Newton iteration cap".into(),
    })
}

/// Finite-difference solve of the elastica equation with the ghost node
/// `θ_{n+1} = θ_{n−1}` and damped Newton; the load is ramped when
/// `12|g̃|L²/E > 5`.
pub fn solve_elastica(
    modulus: f64,
    g: &LoadProfile,
    length: f64,
    n: usize,
    tol: f64,
) -> Result<ElasticaSolution> {
    check_inputs(modulus, length, n, 32)?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("elastica tolerance must be positive, got {tol}")));
    }
    g.validate(length)?;
    let gt = gtilde(g, length, n)?.values;
    let dx = length / n as f64;
    let bend = modulus / 12.0 / (dx * dx);
    let stiffness = 12.0 * gt.iter().map(|v| v.norm()).fold(0.0, f64::max) * length * length / modulus;
    let stages = if stiffness > 5.0 { (stiffness / 2.5).ceil() as usize } else { 1 };
    let mut theta = vec![0.0; n + 1];
    let mut residual = 0.0;
    let mut iterations = 0;
    for k in 1..=stages {
        let s = k as f64 / stages as f64;
        let scaled: Vec<Vec2> = gt.iter().map(|v| *v * s).collect();
        let (res, it) = fd_newton(&mut theta, &scaled, bend, tol, 100)?;
        residual = res;
        iterations += it;
    }
    let mut sol = ElasticaSolution::from_theta(length, modulus, theta, g);
    sol.residual = residual;
    sol.iterations = iterations;
    Ok(sol)
}

/// The discretized limit energy used by [`minimize_j2`]: forward-difference
/// curvature on cells and the trapezoid midline loaded at the nodes.
#[derive(Debug, Clone)]
pub struct DiscreteJ2 {
    pub modulus: f64,
    pub length: f64,
    pub n: usize,
    loads: Vec<Vec2>,
    /// `G_k = Σ_i q_i w_ik g_i`, the load felt by the tangent at node `k`.
    lever: Vec<Vec2>,
}

impl DiscreteJ2 {
    pub fn new(modulus: f64, g: &LoadProfile, length: f64, n: usize) -> Result<Self> {
        check_inputs(modulus, length, n, 8)?;
        let x = grid(length, n);
        let dx = length / n as f64;
        let loads: Vec<Vec2> = x.iter().map(|&xi| g.eval(xi)).collect();
        let q = |i: usize| if i == 0 || i == n { 0.5 * dx } else { dx };
        let mut lever = vec![Vec2::ZERO; n + 1];
        let mut tail = Vec2::ZERO;
        for k in (1..=n).rev() {
            lever[k] = tail * dx + loads[k] * (0.5 * dx * q(k));
            tail += loads[k] * q(k);
        }
        Ok(Self {
            modulus,
            length,
            n,
            loads,
            lever,
        })
    }

    fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let dx = self.dx();
        let mut bending = 0.0;
        for i in 0..self.n {
            let d = theta[i + 1] - theta[i];
            bending += d * d;
        }
        bending *= self.modulus / 24.0 / dx;
        let mut y = Vec2::ZERO;
        let mut work = 0.5 * dx * self.loads[0].dot(y);
        for i in 1..=self.n {
            let (s0, c0) = theta[i - 1].sin_cos();
            let (s1, c1) = theta[i].sin_cos();
            y += Vec2::new(c0 + c1, s0 + s1) * (0.5 * dx);
            let q = if i == self.n { 0.5 * dx } else { dx };
            work += q * self.loads[i].dot(y);
        }
        bending - work
    }

    /// Partial derivatives with respect to `θ_0..θ_n`; entry 0 is zero
    /// because `θ_0` is clamped.
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.n;
        let b = self.modulus / 12.0 / self.dx();
        let mut grad = vec![0.0; n + 1];
        for k in 1..=n {
            let mut bend = theta[k] - theta[k - 1];
            if k < n {
                bend -= theta[k + 1] - theta[k];
            }
            let (s, c) = theta[k].sin_cos();
            grad[k] = b * bend - Vec2::new(-s, c).dot(self.lever[k]);
        }
        grad
    }

    /// Gradient per unit length, the discrete counterpart of the equation's
    /// residual.
    pub fn gradient_density(&self, theta: &[f64]) -> Vec<f64> {
        let dx = self.dx();
        let mut g = self.gradient(theta);
        for (k, v) in g.iter_mut().enumerate() {
            *v /= if k == self.n { 0.5 * dx } else { dx };
        }
        g
    }
}

/// Preconditioned gradient descent on [`DiscreteJ2`] until the gradient
/// density has sup norm at most `1e−8`.
pub fn minimize_j2(modulus: f64, g: &LoadProfile, length: f64, n: usize) -> Result<ElasticaSolution> {
    const GRAD_TOL: f64 = 1e-8;
    const MAX_ITERS: usize = 20_000;
    g.validate(length)?;
    let j = DiscreteJ2::new(modulus, g, length, n)?;
    let b = modulus / 12.0 / (length / n as f64);
    let mut theta = vec![0.0; n + 1];
    let mut value = j.value(&theta);
    let mut grad = j.gradient(&theta);
    for it in 0..MAX_ITERS {
        let density = sup(&j.gradient_density(&theta));
        if density <= GRAD_TOL {
            let mut sol = ElasticaSolution::from_theta(length, modulus, theta, g);
            sol.residual = density;
            sol.iterations = it;
            return Ok(sol);
        }
        // Bending stiffness plus the convex part of the load curvature.
        let diag: Vec<f64> = (1..=n)
            .map(|k| {
                let (s, c) = theta[k].sin_cos();
                let base = if k == n { b } else { 2.0 * b };
                base + Vec2::new(c, s).dot(j.lever[k]).max(0.0)
            })
            .collect();
        let off = vec![-b; n];
        let rhs: Vec<f64> = grad[1..].iter().map(|v| -v).collect();
        let p = solve_tridiagonal(&off, &diag, &off, &rhs)?;
        let slope: f64 = p.iter().zip(&grad[1..]).map(|(a, b)| a * b).sum();
        let mut alpha = 1.0;
        loop {
            let mut trial = theta.clone();
            for k in 1..=n {
                trial[k] += alpha * p[k - 1];
            }
            let vt = j.value(&trial);
            let armijo = vt <= value + 1e-4 * alpha * slope;
            let gt = j.gradient(&trial);
            let roundoff = alpha < 1e-6 && sup(&gt) < sup(&grad);
            if armijo || roundoff {
                theta = trial;
                value = vt;
                grad = gt;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: density,
                    context: "J2 descent line search stalled".into(),
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERS,
        residual: sup(&j.gradient_density(&theta)),
        context: "J2 descent iteration cap".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gtilde_cases() {
        let z = gtilde(&LoadProfile::zero(), 1.0, 16).unwrap();
        assert!(z.values.iter().all(|v| *v == Vec2::ZERO));
        let gamma = 1e-3;
        let t = gtilde(&LoadProfile::transverse(gamma), 2.0, 64).unwrap();
        assert_eq!(t.values[64], Vec2::ZERO);
        for (x, v) in t.x.iter().zip(&t.values) {
            assert!(v.x.abs() < 1e-15);
            assert!((v.y - gamma * (2.0 - x)).abs() < 1e-12);
        }
        assert!(gtilde(&LoadProfile::zero(), 1.0, 7).is_err());
    }

    #[test]
    fn gtilde_converges_at_second_order() {
        let g = LoadProfile::samples(
            (0..=200).map(|i| i as f64 / 200.0).collect(),
            (0..=200)
                .map(|i| {
                    let x = i as f64 / 200.0;
                    Vec2::new((3.0 * x).sin(), -(x * x))
                })
                .collect(),
        )
        .unwrap();
        let diff = |n: usize| {
            let a = gtilde(&g, 1.0, n).unwrap();
            let b = gtilde(&g, 1.0, 2 * n).unwrap();
            (0..=n).map(|i| (a.values[i] - b.values[2 * i]).norm()).fold(0.0, f64::max)
        };
        let (d1, d2) = (diff(10), diff(20));
        assert!(d1 * 10.0 * 10.0 < 1.0 && d2 < 0.3 * d1, "{d1} {d2}");
    }

    #[test]
    fn zero_load_gives_straight_beam() {
        let s = solve_elastica(1.0, &LoadProfile::zero(), 1.0, 64, 1e-12).unwrap();
        assert!(s.theta.iter().all(|&t| t == 0.0));
        assert_eq!(s.j2, 0.0);
        let m = minimize_j2(1.0, &LoadProfile::zero(), 1.0, 64).unwrap();
        assert!(m.theta.iter().all(|&t| t == 0.0));
        for (x, y) in s.x.iter().zip(&s.ybar) {
            assert!((y.x - x).abs() < 1e-15 && y.y == 0.0);
        }
    }

    #[test]
    fn midline_of_constant_angle() {
        let g = LoadProfile::zero();
        let a = 0.7;
        let mut s = ElasticaSolution::from_theta(2.0, 1.0, vec![a; 41], &g);
        reconstruct_midline(&mut s);
        for (x, y) in s.x.iter().zip(&s.ybar) {
            assert!((y.x - x * a.cos()).abs() < 1e-14 && (y.y - x * a.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn j2_of_straight_beam_under_transverse_load() {
        let s = ElasticaSolution::from_theta(1.0, 1.0, vec![0.0; 33], &LoadProfile::transverse(1e-3));
        assert_eq!(s.j2, 0.0);
    }

    #[test]
    fn small_load_matches_linear_cantilever() {
        let gamma = 1e-3;
        let s = solve_elastica(1.0, &LoadProfile::transverse(gamma), 1.0, 256, 1e-12).unwrap();
        assert!(s.residual <= 1e-12);
        let tip = s.tip_angle();
        assert!((tip + 2e-3).abs() <= 0.005 * 2e-3, "{tip}");
        assert!(s.kappa[256] == 0.0);
        let chord = s.ybar[256].norm();
        assert!(chord <= 1.0);
    }

    /// Discrete linearized cantilever: `−(E/12)θ″ + g̃₂ = 0` on the same grid.
    fn discrete_linear(gamma: f64, n: usize) -> Vec<f64> {
        let dx = 1.0 / n as f64;
        let bend = 1.0 / 12.0 / (dx * dx);
        let gt = gtilde(&LoadProfile::transverse(gamma), 1.0, n).unwrap().values;
        let mut sub = vec![-bend; n];
        sub[n - 1] = -2.0 * bend;
        let rhs: Vec<f64> = (1..=n).map(|i| -gt[i].y).collect();
        let t = solve_tridiagonal(&sub, &vec![2.0 * bend; n], &vec![-bend; n], &rhs).unwrap();
        std::iter::once(0.0).chain(t).collect()
    }

    #[test]
    fn nonlinear_correction_is_quadratic_in_load() {
        let rel = |gamma: f64| {
            let s = solve_elastica(1.0, &LoadProfile::transverse(gamma), 1.0, 256, 1e-14).unwrap();
            let lin = discrete_linear(gamma, 256);
            let d = s.theta.iter().zip(&lin).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            d / sup(&lin)
        };
        let ratio = rel(1e-3) / rel(1e-4);
        assert!((ratio / 100.0 - 1.0).abs() < 0.1, "{ratio}");
        // The discrete linear problem converges to the closed form.
        let lin = discrete_linear(1e-3, 256);
        let err = (0..=256)
            .map(|i| (lin[i] - linear_cantilever_theta(1e-3, 1.0, 1.0, i as f64 / 256.0)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn grid_doubling_is_second_order() {
        let g = LoadProfile::transverse(0.05);
        let a = solve_elastica(1.0, &g, 1.0, 64, 1e-12).unwrap();
        let b = solve_elastica(1.0, &g, 1.0, 128, 1e-12).unwrap();
        let c = solve_elastica(1.0, &g, 1.0, 256, 1e-12).unwrap();
        let d1 = (0..=64).map(|i| (a.theta[i] - b.theta[2 * i]).abs()).fold(0.0, f64::max);
        let d2 = (0..=128).map(|i| (b.theta[i] - c.theta[2 * i]).abs()).fold(0.0, f64::max);
        assert!((d1 / d2 - 4.0).abs() < 0.5, "{d1} {d2}");
    }

    #[test]
    fn two_discretizations_agree() {
        let g = LoadProfile::transverse(1e-3);
        let s = solve_elastica(1.0, &g, 1.0, 256, 1e-12).unwrap();
        let m = minimize_j2(1.0, &g, 1.0, 256).unwrap();
        let d = s.theta.iter().zip(&m.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d <= 1e-6, "{d}");
    }

    #[test]
    fn discrete_gradient_matches_finite_differences() {
        let g = LoadProfile::Constant(Vec2::new(0.3, -0.8));
        let j = DiscreteJ2::new(1.3, &g, 1.5, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut theta: Vec<f64> = (0..=64).map(|_| rng.gen_range(-0.5..0.5)).collect();
        theta[0] = 0.0;
        let grad = j.gradient(&theta);
        for _ in 0..10 {
            let mut d: Vec<f64> = (0..=64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            d[0] = 0.0;
            let t = 1e-6;
            let plus: Vec<f64> = theta.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let minus: Vec<f64> = theta.iter().zip(&d).map(|(a, b)| a - t * b).collect();
            let fd = (j.value(&plus) - j.value(&minus)) / (2.0 * t);
            let exact: f64 = grad.iter().zip(&d).map(|(a, b)| a * b).sum();
            assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{fd} {exact}");
        }
    }

    #[test]
    fn first_variation_matches_equation_residual() {
        let g = LoadProfile::transverse(0.2);
        let n = 128;
        let j = DiscreteJ2::new(1.0, &g, 1.0, n).unwrap();
        let theta: Vec<f64> = (0..=n).map(|i| -0.3 * (i as f64 / n as f64).powi(2)).collect();
        let gt = gtilde(&g, 1.0, n).unwrap().values;
        let dx = 1.0 / n as f64;
        let fd = fd_residual(&theta, &gt, 1.0 / 12.0 / (dx * dx));
        let dens = j.gradient_density(&theta);
        let worst = (1..n).map(|i| (dens[i] - fd[i - 1]).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3 * sup(&fd).max(1e-3), "{worst}");
    }

    #[test]
    fn solution_is_a_local_minimum_of_j2() {
        let g = LoadProfile::transverse(1e-3);
        let s = solve_elastica(1.0, &g, 1.0, 256, 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let amp: f64 = rng.gen_range(-1e-2..1e-2);
            let k: f64 = rng.gen_range(0.5..4.0);
            let theta: Vec<f64> = s
                .x
                .iter()
                .zip(&s.theta)
                .map(|(x, t)| t + amp * (k * x).sin())
                .collect();
            let p = ElasticaSolution::from_theta(1.0, 1.0, theta, &g);
            assert!(s.j2 <= p.j2, "{} {}", s.j2, p.j2);
        }
    }

    #[test]
    fn large_load_is_ramped() {
        let g = LoadProfile::transverse(3.0);
        let s = solve_elastica(1.0, &g, 1.0, 128, 1e-10).unwrap();
        assert!(s.tip_angle() < -1.0 && s.tip_angle() > -std::f64::consts::PI);
        let m = minimize_j2(1.0, &g, 1.0, 128).unwrap();
        let d = s.theta.iter().zip(&m.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-3, "{d}");
    }

    #[test]
    fn invalid_inputs() {
        let g = LoadProfile::zero();
        assert!(matches!(solve_elastica(0.0, &g, 1.0, 64, 1e-12), Err(Error::Config(_))));
        assert!(matches!(solve_elastica(1.0, &g, 1.0, 16, 1e-12), Err(Error::Config(_))));
    }
}

//! Constructive Lipschitz truncation of gradients on rectangles and on thin
//! rectangles `Ω_h = (0,L)×(−h/2,h/2)`.
//!
//! The discrete gradient bound is enforced in the entrywise sup norm of the
//! grid differences, `max |Δv|/δ` over edges and components, the norm in
//! which the `ℓ¹` McShane extension is exactly Lipschitz.

pub mod extension;
pub mod grid;
pub mod maximal;
pub mod rough;

pub use extension::{cells_to_nodes, lipschitz_truncate, mcshane_extension, measured_lipschitz, LevelTruncation};
pub use grid::GridFunction;
pub use maximal::{maximal_function, radius_ladder, select_lambda, LambdaChoice, LAMBDA_CANDIDATES};
pub use rough::rough_field;

use crate::error::{Error, Result};

/// Relative margin between the extension constant and `λ`, absorbing the
/// rounding of the sweeps.
const LAMBDA_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationResult {
    pub lambda: f64,
    /// Truncated field on `Ω_h`.
    pub v: GridFunction,
    /// `{u ≠ v}` on the nodes of `Ω_h`.
    pub bad: Vec<bool>,
    pub bad_area: f64,
    /// `∫_{Ω_h} |∇u|²`.
    pub energy: f64,
    /// `λ²|{u ≠ v}| / (∫|∇u|² / ln(A/a))`, zero when nothing is truncated.
    pub q: f64,
    /// Selected strip `i₀ ∈ [−N_h, N_h]`.
    pub strip: i64,
    /// `N_h`.
    pub half_strips: usize,
    /// Bad area of each strip `i = −N_h..=N_h`.
    pub strip_bad_areas: Vec<f64>,
    /// Good-set threshold on the maximal function.
    pub threshold: f64,
    /// `∫|∇u|²` over the reflected domain.
    pub extended_energy: f64,
}

/// Largest `N` with `hN + h/2 ≤ 1/2`.
pub fn half_strip_count(h: f64) -> usize {
    ((1.0 - h) / (2.0 * h) + 1e-9).floor().max(0.0) as usize
}

/// Row of `u` copied to row `r` of strip `i` in the reflection: strip `0`
/// is `u` itself and odd strips are flipped, so rows agree across strip
/// boundaries.
fn source_row(i: i64, r: usize, ny: usize) -> usize {
    if i.rem_euclid(2) == 0 {
        r
    } else {
        ny - 1 - r
    }
}

/// `u` reflected across the strips `S_{h,i}`, `|i| ≤ n`, stacked bottom to top.
pub fn reflect(u: &GridFunction, n: usize) -> GridFunction {
    let strips = 2 * n + 1;
    let rows = strips * (u.ny - 1) + 1;
    let m = u.components;
    let mut values = Vec::with_capacity(u.nx * rows * m);
    for k in 0..rows {
        let s = (k / (u.ny - 1)).min(strips - 1);
        let r = k - s * (u.ny - 1);
        let src = source_row(s as i64 - n as i64, r, u.ny);
        let start = src * u.nx * m;
        values.extend_from_slice(&u.values[start..start + u.nx * m]);
    }
    GridFunction {
        nx: u.nx,
        ny: rows,
        dx: u.dx,
        dy: u.dy,
        components: m,
        values,
    }
}

/// Extended-domain rows of strip `i` mapped back onto `Ω_h`:
/// `v(x₁, x₂) = w(x₁, ih + (−1)^i x₂)`.
fn restrict(w: &GridFunction, i: i64, n: usize, ny: usize) -> GridFunction {
    let s = (i + n as i64) as usize;
    let m = w.components;
    let mut values = Vec::with_capacity(w.nx * ny * m);
    for j in 0..ny {
        let k = s * (ny - 1) + source_row(i, j, ny);
        let start = k * w.nx * m;
        values.extend_from_slice(&w.values[start..start + w.nx * m]);
    }
    GridFunction {
        nx: w.nx,
        ny,
        dx: w.dx,
        dy: w.dy,
        components: m,
        values,
    }
}

/// `u` reflected onto the strips together with the maximal function of its
/// gradient; independent of the levels `(a, A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedField {
    pub u: GridFunction,
    /// `N_h`.
    pub half_strips: usize,
    pub extended: GridFunction,
    /// Maximal function of `|∇u|` on the cells of the extended grid.
    pub maximal: GridFunction,
    /// The same at the nodes, maximized over adjacent cells.
    pub maximal_nodes: Vec<f64>,
}

impl ReflectedField {
    /// Errors when fewer than three strips fit, i.e. `h = (ny−1)δ₂ > 1/3`.
    pub fn new(u: &GridFunction) -> Result<Self> {
        let h = u.height();
        let n = half_strip_count(h);
        if n < 1 {
            return Err(Error::Config(format!(
                "thickness {h} leaves {} strip(s); at least 3 are needed",
                2 * n + 1
            )));
        }
        let extended = reflect(u, n);
        let maximal = maximal_function(&extended.gradient_magnitude())?;
        let maximal_nodes = cells_to_nodes(&maximal);
        Ok(Self {
            u: u.clone(),
            half_strips: n,
            extended,
            maximal,
            maximal_nodes,
        })
    }

    /// Keeps the extended field on `good` and extends with constant `lipschitz`.
    fn assemble(&self, good: &[bool], lipschitz: f64) -> Result<GridFunction> {
        mcshane_extension(&self.extended, good, lipschitz)
    }

    fn sublevel(&self, t: f64) -> Vec<bool> {
        self.maximal_nodes.iter().map(|f| *f <= t).collect()
    }

    /// Truncation at the level chosen in `[a, A]` for exponent `p`.
    ///
    /// Keeps `u` on the largest sublevel set of the maximal function on
    /// which the extension with constant `λ` stays `λ`-Lipschitz, falling
    /// back to a single node of least maximal function, and maps back the
    /// strip with the least bad area.
    pub fn truncate(&self, a: f64, big_a: f64, p: f64) -> Result<TruncationResult> {
        let (u, n) = (&self.u, self.half_strips);
        let choice = select_lambda(&self.maximal, a, big_a, p)?;
        let lambda = choice.lambda;
        let target = lambda * (1.0 - LAMBDA_MARGIN);
        let passes = |good: &[bool]| -> Result<Option<GridFunction>> {
            let w = self.assemble(good, target)?;
            Ok((w.gradient_sup() <= lambda).then_some(w))
        };

        let mut levels = self.maximal_nodes.clone();
        levels.sort_by(|x, y| x.total_cmp(y));
        levels.dedup();
        let top = *levels.last().expect("grid has nodes");
        let (threshold, w) = match passes(&self.sublevel(top))? {
            Some(w) => (top, w),
            None => {
                let first = self
                    .maximal_nodes
                    .iter()
                    .enumerate()
                    .fold(0, |best, (k, f)| if *f < self.maximal_nodes[best] { k } else { best });
                let mut single = vec![false; self.maximal_nodes.len()];
                single[first] = true;
                // A single node is trivially Lipschitz; the rounding margin
                // keeps its cone within λ.
                let mut best = (f64::NEG_INFINITY, passes(&single)?.ok_or_else(|| {
                    Error::Truncation(format!("cone of slope {target} exceeds {lambda} after rounding"))
                })?);
                let (mut lo, mut hi) = (None::<usize>, levels.len() - 1);
                loop {
                    let mid = match lo {
                        None => 0,
                        Some(l) if hi - l > 1 => (l + hi) / 2,
                        Some(_) => break,
                    };
                    match passes(&self.sublevel(levels[mid]))? {
                        Some(w) => {
                            lo = Some(mid);
                            best = (levels[mid], w);
                        }
                        None if lo.is_none() => break,
                        None => hi = mid,
                    }
                }
                best
            }
        };

        let bad_ext = self.extended.difference_mask(&w);
        let mut strip_bad_areas = Vec::with_capacity(2 * n + 1);
        for i in -(n as i64)..=(n as i64) {
            let mask: Vec<bool> = (0..u.num_nodes())
                .map(|node| {
                    let (col, row) = (node % u.nx, node / u.nx);
                    let k = (i + n as i64) as usize * (u.ny - 1) + source_row(i, row, u.ny);
                    bad_ext[k * u.nx + col]
                })
                .collect();
            strip_bad_areas.push(u.masked_area(&mask));
        }
        // Ties prefer the unreflected strip, then small |i|.
        let order = std::iter::once(0i64).chain((1..=n as i64).flat_map(|k| [k, -k]));
        let strip = order
            .fold(None::<(i64, f64)>, |best, i| {
                let area = strip_bad_areas[(i + n as i64) as usize];
                match best {
                    Some((_, b)) if b <= area => best,
                    _ => Some((i, area)),
                }
            })
            .expect("at least one strip")
            .0;
        let v = restrict(&w, strip, n, u.ny);
        let bad = u.difference_mask(&v);
        let bad_area = u.masked_area(&bad);
        let energy = u.dirichlet_energy();
        let q = if bad_area == 0.0 {
            0.0
        } else {
            lambda * lambda * bad_area * (big_a / a).ln() / energy
        };
        Ok(TruncationResult {
            lambda,
            v,
            bad,
            bad_area,
            energy,
            q,
            strip,
            half_strips: n,
            strip_bad_areas,
            threshold,
            extended_energy: self.extended.dirichlet_energy(),
        })
    }
}

/// Truncation of `u` on `Ω_h` (thickness `h = (ny−1)δ₂`): reflection onto
/// the `2N_h + 1` strips, then [`ReflectedField::truncate`].
pub fn thin_truncate(u: &GridFunction, a: f64, big_a: f64, p: f64) -> Result<TruncationResult> {
    ReflectedField::new(u)?.truncate(a, big_a, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thin(nx: usize, ny: usize, h: f64, f: impl FnMut(f64, f64) -> Vec<f64>) -> GridFunction {
        GridFunction::from_fn(nx, ny, 1.0 / (nx - 1) as f64, h / (ny - 1) as f64, 2, f).unwrap()
    }

    #[test]
    fn strip_count() {
        assert_eq!(half_strip_count(0.2), 2);
        assert_eq!(half_strip_count(0.1), 4);
        assert_eq!(half_strip_count(1.0 / 3.0), 1);
        assert_eq!(half_strip_count(0.4), 0);
    }

    #[test]
    fn reflection_is_continuous_and_multiplies_energy() {
        let u = rough_field(33, 9, 1.0, 0.2, 3).unwrap();
        let n = half_strip_count(0.2);
        let ext = reflect(&u, n);
        assert_eq!(ext.ny, (2 * n + 1) * 8 + 1);
        // Strip 0 is u itself, odd strips are mirror images.
        for i in -(n as i64)..=(n as i64) {
            let back = restrict(&ext, i, n, u.ny);
            assert_eq!(back, u);
        }
        let ratio = ext.dirichlet_energy() / u.dirichlet_energy();
        // Forward differences use the lower row of each cell, which
        // reflection swaps, so the ratio is 2N_h + 1 only up to that shift.
        assert!(ratio <= (2 * n + 3) as f64 && ratio >= (2 * n - 1) as f64, "{ratio}");
    }

    #[test]
    fn smooth_small_gradient_is_untouched() {
        let u = thin(65, 9, 0.2, |x, y| vec![0.1 * x, 0.2 * y + 0.05 * x * x]);
        let r = thin_truncate(&u, 1.0, 10.0, 2.0).unwrap();
        assert_eq!(r.v, u);
        assert!(r.bad.iter().all(|b| !b));
        assert_eq!(r.q, 0.0);
        assert_eq!(r.strip, 0);
    }

    #[test]
    fn spike_bad_set_is_at_most_the_average() {
        let mut u = thin(65, 9, 0.2, |x, y| vec![0.2 * x, 0.3 * y]);
        let k = u.node(30, 4);
        u.values[2 * k] += 0.5;
        let r = thin_truncate(&u, 1.0, 100.0, 2.0).unwrap();
        let total: f64 = r.strip_bad_areas.iter().sum();
        assert!(r.bad_area <= total / (2 * r.half_strips + 1) as f64 * (1.0 + 1e-12));
        assert!(r.bad_area > 0.0 || total == 0.0);
        assert!(r.v.gradient_sup() <= r.lambda);
    }

    #[test]
    fn bound_and_identity_on_rough_field() {
        let u = rough_field(65, 9, 1.0, 0.2, 11).unwrap();
        let r = thin_truncate(&u, 0.5, 50.0, 2.0).unwrap();
        assert!(r.lambda >= 0.5 && r.lambda <= 50.0);
        assert!(r.v.gradient_sup() <= r.lambda);
        for node in 0..u.num_nodes() {
            if !r.bad[node] {
                assert_eq!(&r.v.values[2 * node..2 * node + 2], &u.values[2 * node..2 * node + 2]);
            }
        }
        assert!(r.q.is_finite());
    }

    #[test]
    fn too_thick_domain_rejected() {
        let u = thin(9, 5, 0.4, |x, _| vec![x, 0.0]);
        assert!(matches!(thin_truncate(&u, 1.0, 2.0, 2.0), Err(Error::Config(_))));
    }
}

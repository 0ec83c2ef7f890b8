//! Lipschitz extension from a good set by the upper McShane formula in the
//! `ℓ¹` metric of the grid.

use crate::error::{Error, Result};

use super::grid::GridFunction;

/// Relative bisection tolerance of [`measured_lipschitz`].
const LIPSCHITZ_RTOL: f64 = 1e-12;

/// `u` on `good`, `min_{y good} u(y) + L|x − y|₁` elsewhere, per component.
///
/// The `ℓ¹` cone is a sum of one-dimensional cones, so the inf-convolution
/// is two exact sweeps per axis.
pub fn mcshane_extension(u: &GridFunction, good: &[bool], lipschitz: f64) -> Result<GridFunction> {
    if !good.iter().any(|g| *g) {
        return Err(Error::Truncation("good set is empty; raise the upper level A".into()));
    }
    let (nx, ny, m) = (u.nx, u.ny, u.components);
    let (sx, sy) = (lipschitz * u.dx, lipschitz * u.dy);
    let mut out = u.values.clone();
    let mut w = vec![0.0; nx * ny];
    for c in 0..m {
        for n in 0..nx * ny {
            w[n] = if good[n] { u.values[n * m + c] } else { f64::INFINITY };
        }
        for j in 0..ny {
            let row = &mut w[j * nx..(j + 1) * nx];
            for i in 1..nx {
                row[i] = row[i].min(row[i - 1] + sx);
            }
            for i in (0..nx - 1).rev() {
                row[i] = row[i].min(row[i + 1] + sx);
            }
        }
        for i in 0..nx {
            for j in 1..ny {
                w[j * nx + i] = w[j * nx + i].min(w[(j - 1) * nx + i] + sy);
            }
            for j in (0..ny - 1).rev() {
                w[j * nx + i] = w[j * nx + i].min(w[(j + 1) * nx + i] + sy);
            }
        }
        for n in 0..nx * ny {
            if !good[n] {
                out[n * m + c] = w[n];
            }
        }
    }
    GridFunction::new(nx, ny, u.dx, u.dy, m, out)
}

/// Whether the extension with constant `lipschitz` keeps every edge
/// difference within `lipschitz` (up to `1e-12` relative rounding).
fn extension_is_lipschitz(u: &GridFunction, good: &[bool], lipschitz: f64) -> Result<bool> {
    let v = mcshane_extension(u, good, lipschitz)?;
    Ok(v.gradient_sup() <= lipschitz * (1.0 + LIPSCHITZ_RTOL) + f64::MIN_POSITIVE)
}

/// Smallest `L` (to relative `1e-12`) for which the extension of `u|good`
/// with constant `L` is `L`-Lipschitz along grid edges; this is the `ℓ¹`
/// Lipschitz constant of `u` on the good set.
pub fn measured_lipschitz(u: &GridFunction, good: &[bool]) -> Result<f64> {
    if extension_is_lipschitz(u, good, 0.0)? {
        return Ok(0.0);
    }
    let (lo_v, hi_v) = u
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let mut hi = 2.0 * (hi_v - lo_v) / u.dx.min(u.dy);
    let mut lo = 0.0;
    while !extension_is_lipschitz(u, good, hi)? {
        hi *= 2.0;
    }
    while hi - lo > LIPSCHITZ_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if extension_is_lipschitz(u, good, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A truncation at a fixed level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTruncation {
    pub v: GridFunction,
    /// `{f ≤ t}` on the nodes.
    pub good: Vec<bool>,
    /// `{u ≠ v}` on the nodes.
    pub bad: Vec<bool>,
    /// Measured Lipschitz constant of `u` on the good set; `v` is
    /// Lipschitz with the same constant.
    pub lipschitz: f64,
    /// `lipschitz / t`, the constant `C₄` of the level.
    pub c4: f64,
}

/// Node values of a cell function: the maximum over the adjacent cells.
pub fn cells_to_nodes(f: &GridFunction) -> Vec<f64> {
    let (cx, cy) = (f.nx, f.ny);
    let (nx, ny) = (cx + 1, cy + 1);
    let mut out = vec![0.0_f64; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let mut m = 0.0_f64;
            for (ci, cj) in [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)] {
                if ci < cx && cj < cy {
                    m = m.max(f.values[cj * cx + ci]);
                }
            }
            out[j * nx + i] = m;
        }
    }
    out
}

/// Keeps `u` where the node maximal function `f_node ≤ t` and extends it
/// from there with the measured good-set Lipschitz constant.
pub fn lipschitz_truncate(u: &GridFunction, f_node: &[f64], t: f64) -> Result<LevelTruncation> {
    if f_node.len() != u.num_nodes() {
        return Err(Error::Config(format!(
            "maximal function has {} nodes, grid has {}",
            f_node.len(),
            u.num_nodes()
        )));
    }
    let good: Vec<bool> = f_node.iter().map(|f| *f <= t).collect();
    if !good.iter().any(|g| *g) {
        return Err(Error::Truncation(format!("no node has maximal function <= {t}; raise A")));
    }
    let lipschitz = measured_lipschitz(u, &good)?;
    let v = mcshane_extension(u, &good, lipschitz)?;
    let bad = u.difference_mask(&v);
    Ok(LevelTruncation {
        v,
        good,
        bad,
        lipschitz,
        c4: if t > 0.0 { lipschitz / t } else { f64::INFINITY },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_input_is_unchanged() {
        let u = GridFunction::from_fn(16, 6, 0.1, 0.05, 2, |x, y| vec![0.3 * x.sin(), 0.2 * y]).unwrap();
        let f = vec![0.0; u.num_nodes()];
        let r = lipschitz_truncate(&u, &f, 1.0).unwrap();
        assert_eq!(r.v, u);
        assert!(r.bad.iter().all(|b| !b));
    }

    #[test]
    fn spike_is_flattened_only_at_its_node() {
        let n = 16;
        let mut u = GridFunction::zeros(n, n, 1.0 / 15.0, 1.0 / 15.0, 1).unwrap();
        let spike = u.node(7, 9);
        u.values[spike] = 5.0;
        // Everything near the spike is declared bad.
        let f: Vec<f64> = (0..u.num_nodes())
            .map(|k| {
                let (i, j) = (k % n, k / n);
                if i.abs_diff(7) <= 2 && j.abs_diff(9) <= 2 {
                    10.0
                } else {
                    0.0
                }
            })
            .collect();
        let r = lipschitz_truncate(&u, &f, 1.0).unwrap();
        assert_eq!(r.lipschitz, 0.0);
        assert!(r.v.values.iter().all(|v| *v == 0.0));
        let bad: Vec<usize> = (0..u.num_nodes()).filter(|k| r.bad[*k]).collect();
        assert_eq!(bad, vec![spike]);
    }

    #[test]
    fn good_set_is_kept_bitwise_and_bound_holds() {
        let u = GridFunction::from_fn(24, 10, 0.05, 0.02, 1, |x, y| vec![(7.0 * x).sin() * (30.0 * y).cos() + x * y])
            .unwrap();
        let f: Vec<f64> = (0..u.num_nodes()).map(|k| ((k * 7919) % 13) as f64).collect();
        let r = lipschitz_truncate(&u, &f, 6.0).unwrap();
        for k in 0..u.num_nodes() {
            if r.good[k] {
                assert_eq!(r.v.values[k].to_bits(), u.values[k].to_bits());
            }
        }
        assert!(r.v.gradient_sup() <= r.lipschitz * (1.0 + 1e-9));
        assert!(r.bad.iter().zip(&r.good).all(|(b, g)| !(*b && *g)));
    }

    #[test]
    fn measured_constant_matches_pairwise_maximum() {
        let u = GridFunction::from_fn(9, 5, 0.2, 0.1, 1, |x, y| vec![(3.0 * x).cos() + y * y * 4.0]).unwrap();
        let good: Vec<bool> = (0..u.num_nodes()).map(|k| k % 3 != 1).collect();
        let mut exact = 0.0_f64;
        for a in 0..u.num_nodes() {
            for b in 0..u.num_nodes() {
                if a != b && good[a] && good[b] {
                    let d = (a % 9).abs_diff(b % 9) as f64 * 0.2 + (a / 9).abs_diff(b / 9) as f64 * 0.1;
                    exact = exact.max((u.values[a] - u.values[b]).abs() / d);
                }
            }
        }
        let l = measured_lipschitz(&u, &good).unwrap();
        assert!((l - exact).abs() <= 1e-9 * exact, "{l} vs {exact}");
    }

    #[test]
    fn empty_good_set_fails() {
        let u = GridFunction::zeros(4, 4, 0.1, 0.1, 1).unwrap();
        let err = lipschitz_truncate(&u, &[1.0; 16], 0.5).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
    }
}

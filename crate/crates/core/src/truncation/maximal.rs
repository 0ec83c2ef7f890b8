//! Discrete Hardy–Littlewood maximal function and the choice of the
//! truncation level.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::grid::GridFunction;

/// Number of geometric level candidates in [`select_lambda`].
pub const LAMBDA_CANDIDATES: usize = 64;

/// Radii `0, δ, √2δ, 2δ, …` with `δ = min(δ₁, δ₂)`, ending with the first
/// radius that reaches the grid diameter; radius `0` is the cell itself.
pub fn radius_ladder(g: &GridFunction) -> Vec<f64> {
    let diam = (((g.nx - 1) as f64 * g.dx).powi(2) + ((g.ny - 1) as f64 * g.dy).powi(2)).sqrt();
    let mut radii = vec![0.0];
    let mut r = g.dx.min(g.dy);
    loop {
        radii.push(r);
        if r >= diam {
            break;
        }
        r *= std::f64::consts::SQRT_2;
    }
    radii
}

/// Half-widths, in cells, of the discrete ball of radius `r` at each row
/// offset `0..=rows`.
fn ball_rows(g: &GridFunction, r: f64) -> Vec<usize> {
    let rows = ((r / g.dy + 1e-9).floor() as usize).min(g.ny - 1);
    (0..=rows)
        .map(|dj| {
            let dy = dj as f64 * g.dy;
            let half = ((r * r - dy * dy).max(0.0).sqrt() / g.dx + 1e-9).floor() as usize;
            half.min(g.nx - 1)
        })
        .collect()
}

/// Average of `g` over the cells whose centres lie within the ball given by
/// `half` (see [`ball_rows`]) around cell `(i, j)`, via per-row prefix sums.
fn ball_average(g: &GridFunction, prefix: &[f64], i: usize, j: usize, half: &[usize]) -> f64 {
    let (nx, ny) = (g.nx, g.ny);
    let rows = half.len() - 1;
    let (j0, j1) = (j.saturating_sub(rows), (j + rows).min(ny - 1));
    let mut sum = 0.0;
    let mut count = 0usize;
    for jj in j0..=j1 {
        let w = half[jj.abs_diff(j)];
        let (i0, i1) = (i.saturating_sub(w), (i + w).min(nx - 1));
        let row = jj * (nx + 1);
        sum += prefix[row + i1 + 1] - prefix[row + i0];
        count += i1 + 1 - i0;
    }
    sum / count as f64
}

/// `f(x) = max_R ⨍_{B(x,R) ∩ domain} g` over [`radius_ladder`].
pub fn maximal_function(g: &GridFunction) -> Result<GridFunction> {
    if g.components != 1 {
        return Err(Error::Config("maximal function needs a scalar grid".into()));
    }
    if let Some(v) = g.values.iter().find(|v| **v < 0.0) {
        return Err(Error::Config(format!("maximal function needs a nonnegative input, found {v}")));
    }
    let (nx, ny) = (g.nx, g.ny);
    let mut prefix = vec![0.0; ny * (nx + 1)];
    for j in 0..ny {
        for i in 0..nx {
            prefix[j * (nx + 1) + i + 1] = prefix[j * (nx + 1) + i] + g.values[j * nx + i];
        }
    }
    let balls: Vec<Vec<usize>> = radius_ladder(g).iter().skip(1).map(|&r| ball_rows(g, r)).collect();
    let values: Vec<f64> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let prefix = &prefix;
            let balls = &balls;
            (0..nx).map(move |i| {
                balls
                    .iter()
                    .fold(g.values[j * nx + i], |m, half| m.max(ball_average(g, prefix, i, j, half)))
            })
        })
        .collect();
    GridFunction::new(nx, ny, g.dx, g.dy, 1, values)
}

/// Outcome of the level search.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaChoice {
    pub lambda: f64,
    /// `|{f > λ}|`.
    pub level_area: f64,
    /// `g(λ) = λᵖ|{f > λ}|`.
    pub g_value: f64,
    /// `∫fᵖ / ln(A/a)`, the continuous bound on `inf g`.
    pub bound: f64,
    /// `{f > λ}` on the cells of `f`.
    pub level_set: Vec<bool>,
}

/// Minimizes `g(t) = tᵖ|{f > t}|` over [`LAMBDA_CANDIDATES`] geometric
/// candidates in `[a, A]`; ties go to the smallest candidate.
pub fn select_lambda(f: &GridFunction, a: f64, big_a: f64, p: f64) -> Result<LambdaChoice> {
    if !(a > 0.0) || !(big_a > a) || !big_a.is_finite() {
        return Err(Error::Config(format!(
            "truncation levels need 0 < a < A, got a = {a}, A = {big_a}"
        )));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Config(format!("truncation exponent must exceed 1, got p = {p}")));
    }
    let cell = f.dx * f.dy;
    let ratio = big_a / a;
    let candidates: Vec<f64> = (0..LAMBDA_CANDIDATES)
        .map(|k| {
            if k + 1 == LAMBDA_CANDIDATES {
                big_a
            } else {
                a * ratio.powf(k as f64 / (LAMBDA_CANDIDATES - 1) as f64)
            }
        })
        .collect();
    let g_of = |t: f64| t.powf(p) * cell * f.values.iter().filter(|v| **v > t).count() as f64;
    let (lambda, g_value) = candidates
        .par_iter()
        .map(|&t| (t, g_of(t)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold((a, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    let integral: f64 = f.values.iter().map(|v| v.powf(p)).sum::<f64>() * cell;
    let level_set: Vec<bool> = f.values.iter().map(|v| *v > lambda).collect();
    Ok(LambdaChoice {
        lambda,
        level_area: level_set.iter().filter(|b| **b).count() as f64 * cell,
        g_value,
        bound: integral / ratio.ln(),
        level_set,
    })
}

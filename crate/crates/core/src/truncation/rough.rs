//! Seeded rough test fields on thin rectangles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::grid::GridFunction;

/// Fourier modes along the strip.
const MODES_X: usize = 8;
/// Fourier modes across the strip.
const MODES_Y: usize = 2;
/// Localized bumps per field.
const BUMPS: usize = 6;

/// A two-component field on `(0,L)×(−h/2,h/2)` sampled on an `nx×ny`
/// grid; the underlying continuum function depends only on the seed, so
/// grids of different resolution sample the same field.
///
/// A gentle cosine background plus narrow bumps of random sign, so the
/// gradient is moderate on most of the domain with steep isolated peaks.
pub fn rough_field(nx: usize, ny: usize, length: f64, h: f64, seed: u64) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::with_capacity(2 * MODES_X * MODES_Y);
    for _ in 0..2 {
        for k in 0..MODES_X {
            for l in 0..MODES_Y {
                let decay = 0.5 / (1.0 + (k * k + 4 * l * l) as f64);
                modes.push((
                    k as f64,
                    l as f64,
                    rng.gen_range(-1.0..1.0) * decay,
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ));
            }
        }
    }
    let bumps: Vec<(usize, f64, f64, f64, f64)> = (0..BUMPS)
        .map(|_| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (
                rng.gen_range(0..2usize),
                rng.gen_range(0.1..0.9) * length,
                rng.gen_range(-0.3..0.3) * h,
                rng.gen_range(0.04..0.07) * length,
                sign * rng.gen_range(1.0..2.0),
            )
        })
        .collect();
    let dx = length / (nx - 1) as f64;
    let dy = h / (ny - 1) as f64;
    GridFunction::from_fn(nx, ny, dx, dy, 2, |x1, x2| {
        let mut v = vec![0.0; 2];
        for (c, chunk) in modes.chunks(MODES_X * MODES_Y).enumerate() {
            for &(k, l, amp, phase) in chunk {
                v[c] += amp
                    * (std::f64::consts::PI * k * x1 / length + phase).cos()
                    * (std::f64::consts::PI * l * (x2 / h + 0.5)).cos();
            }
        }
        for &(c, bx, by, r, amp) in &bumps {
            let s2 = ((x1 - bx).powi(2) + (x2 - by).powi(2)) / (r * r);
            if s2 < 1.0 {
                v[c] += amp * (1.0 - s2).powi(2);
            }
        }
        v
    })
}

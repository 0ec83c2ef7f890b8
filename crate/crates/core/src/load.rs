//! Distributed loads `g(x₁)` acting on the strip (force per unit length).

use crate::error::{Error, Result};
use crate::tensor::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub enum LoadProfile {
    Constant(Vec2),
    /// Piecewise linear through `(x, value)` samples; `x` strictly increasing.
    Samples { x: Vec<f64>, values: Vec<Vec2> },
}

impl Default for LoadProfile {
    fn default() -> Self {
        LoadProfile::Constant(Vec2::ZERO)
    }
}

impl LoadProfile {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Constant transverse load `(0, −γ)`.
    pub fn transverse(gamma: f64) -> Self {
        LoadProfile::Constant(Vec2::new(0.0, -gamma))
    }

    pub fn samples(x: Vec<f64>, values: Vec<Vec2>) -> Result<Self> {
        if x.len() != values.len() || x.len() < 2 {
            return Err(Error::Config(format!(
                "load samples need at least two matching (x, g) pairs, got {} and {}",
                x.len(),
                values.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("load sample abscissae must increase strictly".into()));
        }
        Ok(LoadProfile::Samples { x, values })
    }

    /// Checks finiteness and coverage of `[0, L]`.
    pub fn validate(&self, length: f64) -> Result<()> {
        match self {
            LoadProfile::Constant(g) => {
                if !g.is_finite() {
                    return Err(Error::Config("load value is not finite".into()));
                }
            }
            LoadProfile::Samples { x, values } => {
                if values.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("load samples are not finite".into()));
                }
                let tol = 1e-12 * length.max(1.0);
                if x[0] > tol || x[x.len() - 1] < length - tol {
                    return Err(Error::Config(format!(
                        "load samples cover [{}, {}] but the strip is [0, {length}]",
                        x[0],
                        x[x.len() - 1]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LoadProfile::Constant(g) => *g == Vec2::ZERO,
            LoadProfile::Samples { values, .. } => values.iter().all(|v| *v == Vec2::ZERO),
        }
    }

    pub fn eval(&self, x1: f64) -> Vec2 {
        match self {
            LoadProfile::Constant(g) => *g,
            LoadProfile::Samples { x, values } => {
                let n = x.len();
                if x1 <= x[0] {
                    return values[0];
                }
                if x1 >= x[n - 1] {
                    return values[n - 1];
                }
                let k = x.partition_point(|&xi| xi <= x1).saturating_sub(1).min(n - 2);
                let t = (x1 - x[k]) / (x[k + 1] - x[k]);
                values[k] * (1.0 - t) + values[k + 1] * t
            }
        }
    }

    /// Sup norm over the profile.
    pub fn max_norm(&self) -> f64 {
        match self {
            LoadProfile::Constant(g) => g.norm(),
            LoadProfile::Samples { values, .. } => {
                values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
            }
        }
    }

    /// `∫ₐᵇ g` exactly (the profile is piecewise linear).
    pub fn integral(&self, a: f64, b: f64) -> Vec2 {
        if a == b {
            return Vec2::ZERO;
        }
        if a > b {
            return -self.integral(b, a);
        }
        match self {
            LoadProfile::Constant(g) => *g * (b - a),
            LoadProfile::Samples { x, .. } => {
                let mut pts = vec![a];
                pts.extend(x.iter().copied().filter(|&xi| xi > a && xi < b));
                pts.push(b);
                let mut acc = Vec2::ZERO;
                for w in pts.windows(2) {
                    acc += (self.eval(w[0]) + self.eval(w[1])) * (0.5 * (w[1] - w[0]));
                }
                acc
            }
        }
    }

    /// The primitive `g̃(x₁) = ∫_L^{x₁} g`.
    pub fn tilde(&self, length: f64, x1: f64) -> Vec2 {
        self.integral(length, x1)
    }

    /// The same profile multiplied by `s`.
    pub fn scaled(&self, s: f64) -> LoadProfile {
        match self {
            LoadProfile::Constant(g) => LoadProfile::Constant(*g * s),
            LoadProfile::Samples { x, values } => LoadProfile::Samples {
                x: x.clone(),
                values: values.iter().map(|v| *v * s).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_profile_interpolates_linearly() {
        let g = LoadProfile::samples(
            vec![0.0, 0.5, 1.0],
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, -2.0), Vec2::new(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(g.eval(0.25), Vec2::new(0.5, -1.0));
        assert_eq!(g.eval(1.0), Vec2::ZERO);
        let total = g.integral(0.0, 1.0);
        assert!((total.x - 0.5).abs() < 1e-15 && (total.y + 1.0).abs() < 1e-15);
        let t = g.tilde(1.0, 0.0);
        assert!((t.x + 0.5).abs() < 1e-15);
        assert!(g.validate(1.0).is_ok());
        assert!(g.validate(2.0).is_err());
    }

    #[test]
    fn constant_primitive() {
        let g = LoadProfile::transverse(1e-3);
        let t = g.tilde(1.0, 0.25);
        assert!((t.y - 0.75e-3).abs() < 1e-18);
        assert_eq!(g.tilde(1.0, 1.0), Vec2::ZERO);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(LoadProfile::samples(vec![0.0], vec![Vec2::ZERO]).is_err());
        assert!(LoadProfile::samples(vec![0.0, 0.0], vec![Vec2::ZERO, Vec2::ZERO]).is_err());
    }
}

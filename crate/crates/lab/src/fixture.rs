//! Negative-control density for the energy checks.

use thinbeam::energy::StoredEnergy;
use thinbeam::{dist_so2, EnergyDensity, Mat2, Result};

/// `W(F) + ε dist²(F, SO(2)) F₁₁²`: vanishes on SO(2) and stays smooth
/// near it, but the factor `F₁₁²` is not invariant under rotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonObjective {
    pub base: EnergyDensity,
    pub eps: f64,
}

impl StoredEnergy for NonObjective {
    fn name(&self) -> String {
        format!("{} + {}·dist²·F11² (non-objective fixture)", self.base, self.eps)
    }

    fn energy(&self, f: &Mat2) -> f64 {
        self.base.energy(f) + self.eps * dist_so2(f).powi(2) * f.a11 * f.a11
    }

    fn stress(&self, f: &Mat2) -> Result<Mat2> {
        // D(½dist²) = F − R for det F > 0.
        let grad_half_dist = EnergyDensity::HalfDistSquared.stress(f)?;
        let d2 = dist_so2(f).powi(2);
        let extra = grad_half_dist * (2.0 * f.a11 * f.a11) + Mat2::unit(0, 0) * (2.0 * d2 * f.a11);
        Ok(self.base.stress(f)? + extra * self.eps)
    }
}

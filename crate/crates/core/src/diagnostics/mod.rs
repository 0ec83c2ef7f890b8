//! Rotation / strain / stress decomposition of strip solutions and the
//! identities it satisfies, evaluated as numerical residuals.

pub mod fields;
pub mod identities;
pub mod rotations;
pub mod study;

pub use fields::{
    column_rotations, strain_field, stress_field, z_field, z_identity_defect, Moments, StressFields, TensorField,
    ZField,
};
pub use identities::{identity_report, IdentityResiduals};
pub use rotations::{slab_count, slab_rotations, smooth_rotations, RotationProfile};
pub use study::{convergence_study, interpolation_check, ConvergenceRow, ConvergenceTable};

use crate::energy::StoredEnergy;
use crate::error::{Error, Result};
use crate::load::LoadProfile;
use crate::strip::DeformationField;

/// Minimum number of element rows for the `x₂`-moments.
pub const MIN_NY: usize = 4;

/// Zero when `|x|` is at the rounding level of a quantity of size `scale`.
pub(crate) fn flush(x: f64, scale: f64) -> f64 {
    if x.abs() <= 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        x
    }
}

/// Every diagnostic field of one strip solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub profile: RotationProfile,
    pub strain: TensorField,
    pub stress: TensorField,
    pub linear_stress: TensorField,
    pub z: ZField,
    pub strain_moments: Moments,
    pub stress_moments: Moments,
    pub identities: IdentityResiduals,
}

pub fn analyze(y: &DeformationField, g: &LoadProfile, w: &dyn StoredEnergy) -> Result<Diagnostics> {
    if y.mesh.ny < MIN_NY {
        return Err(Error::Config(format!(
            "diagnostics need ny >= {MIN_NY} element rows, got {}",
            y.mesh.ny
        )));
    }
    let profile = smooth_rotations(&slab_rotations(y)?, y.h)?;
    let strain = strain_field(y, &profile)?;
    let StressFields { stress, linear } = stress_field(&strain, y.h, w)?;
    let z = z_field(y, &profile)?;
    let identities = identity_report(y, &profile, &strain, &stress, g)?;
    Ok(Diagnostics {
        strain_moments: strain.moments(),
        stress_moments: stress.moments(),
        profile,
        strain,
        stress,
        linear_stress: linear,
        z,
        identities,
    })
}

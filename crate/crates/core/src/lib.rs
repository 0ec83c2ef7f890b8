//! Thin planar elastic strips and their elastica limit.
//!
//! The crate computes stationary points of the rescaled strip energy
//! `J^h(y) = ∫ W(∇_h y) − h² g·y` on `Ω = (0,L)×(−½,½)`, solves the limit
//! elastica equation for the tangent angle, and evaluates the rotation /
//! strain / stress decomposition of strip solutions so that the passage to
//! the limit can be observed numerically. A separate module implements a
//! constructive Lipschitz truncation of gradients on thin rectangles.

pub mod error;
pub mod tensor;
pub mod energy;
pub mod hypotheses;
pub mod load;
pub mod mesh;
pub mod linalg;
pub mod strip;
pub mod elastica;
pub mod diagnostics;
pub mod truncation;

pub use error::{Error, Result};
pub use tensor::{dist_so2, polar_rotation, Mat2, Rotation2, Vec2};
pub use energy::{linearize, taylor_remainder, EnergyDensity, Linearization, StoredEnergy};
pub use load::LoadProfile;
pub use mesh::StripMesh;

//! End-to-end behaviour of strip solutions as the thickness shrinks.

use thinbeam::diagnostics::{analyze, slab_rotations, z_field, z_identity_defect};
use thinbeam::elastica::linear_cantilever_theta;
use thinbeam::strip::{solve_stationary, DeformationField, SolverConfig};
use thinbeam::{EnergyDensity, LoadProfile, StripMesh, Vec2};

const GAMMA: f64 = 1e-3;

fn solve(nx: usize, ny: usize, h: f64, g: &LoadProfile) -> DeformationField {
    let mesh = StripMesh::new(1.0, nx, ny).unwrap();
    let (y, report) =
        solve_stationary(&mesh, h, g, &EnergyDensity::HalfDistSquared, &SolverConfig::default(), None).unwrap();
    assert!(report.converged, "h = {h}: residual {}", report.residual);
    y
}

#[test]
fn cantilever_tip_rotation_matches_linear_theory() {
    let y = solve(128, 8, 0.05, &LoadProfile::transverse(GAMMA));
    let profile = slab_rotations(&y).unwrap();
    let tip = *profile.slab_angles.last().unwrap();
    let exact = linear_cantilever_theta(GAMMA, 1.0, 1.0, 1.0);
    assert!((exact + 2e-3).abs() < 1e-15);
    assert!((tip - exact).abs() <= 0.05 * exact.abs(), "tip {tip} vs {exact}");
}

#[test]
fn tip_position_converges_under_mesh_refinement() {
    let g = LoadProfile::transverse(GAMMA);
    let coarse = solve(128, 8, 0.05, &g).eval(1.0, 0.0);
    let fine = solve(256, 16, 0.05, &g).eval(1.0, 0.0);
    // The deflection is the part of the tip position that the load creates.
    let deflection = |p: Vec2| (p - Vec2::new(1.0, 0.0)).norm();
    let change = (coarse - fine).norm();
    assert!(change <= 0.01 * deflection(fine), "tip moved by {change} of {}", deflection(fine));
}

#[test]
fn scaled_energy_is_stable_across_thickness() {
    let g = LoadProfile::transverse(GAMMA);
    let w = EnergyDensity::HalfDistSquared;
    let ratios: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let nx = 64usize.max((16.0 / h as f64).ceil() as usize);
            let y = solve(nx, 8, h, &g);
            let (elastic, _) = thinbeam::strip::scaled_energy(&y, &g, &w);
            elastic / (h * h)
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), r| (a.min(*r), b.max(*r)));
    assert!(lo > 0.0 && hi <= 2.0 * lo, "{ratios:?}");
}

#[test]
fn decomposition_and_z_identity_on_a_loaded_strip() {
    let g = LoadProfile::transverse(GAMMA);
    let y = solve(160, 8, 0.1, &g);
    let d = analyze(&y, &g, &EnergyDensity::HalfDistSquared).unwrap();
    let m = &y.mesh;
    for e in 0..m.num_elements() {
        for q in 0..4 {
            let x1 = m.qp_coords(e, q).x;
            let r = d.profile.rotation(x1).unwrap();
            let rebuilt = r * (thinbeam::Mat2::IDENTITY + d.strain.at(e, q) * y.h);
            let grad = y.scaled_gradient(e, q);
            assert!((rebuilt - grad).max_abs() <= 1e-12, "element {e}, point {q}");
        }
    }
    let z = z_field(&y, &d.profile).unwrap();
    let defect = z_identity_defect(&y, &z, &d.profile, &d.strain).unwrap();
    assert!(defect < 0.1, "z identity defect {defect}");
}

#[test]
fn sampled_and_constant_loads_agree() {
    let constant = LoadProfile::transverse(GAMMA);
    let sampled = LoadProfile::samples(
        vec![0.0, 0.5, 1.0],
        vec![Vec2::new(0.0, -GAMMA); 3],
    )
    .unwrap();
    let a = solve(80, 8, 0.2, &constant);
    let b = solve(80, 8, 0.2, &sampled);
    let w = EnergyDensity::HalfDistSquared;
    let ra = analyze(&a, &constant, &w).unwrap().identities.as_array();
    let rb = analyze(&b, &sampled, &w).unwrap().identities.as_array();
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-12), "{ra:?} vs {rb:?}");
    }
}

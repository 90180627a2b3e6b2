mod common;

use std::f64::consts::PI;

use willmore::functionals::evaluate;
use willmore::mesh::build_icosphere;
use willmore::mobius::{
    apply_stereographic_t, blow_down_sweep, blow_up_sweep, default_ray_vertex, invert_point, match_t_by_inversion,
    sphere_inversion, sphere_t, stereographic_t, willmore_invariance_check, BlowUpConfig, MatchConfig, MobiusError,
};
use willmore::{TriangleMesh, Vec3};

use common::{clifford_torus, egg_torus, geom, rel};

/// Least-squares sphere `(centre, radius, largest relative deviation)`.
fn sphere_fit(m: &TriangleMesh) -> (Vec3, f64, f64) {
    let mut a = nalgebra::Matrix4::<f64>::zeros();
    let mut b = nalgebra::Vector4::<f64>::zeros();
    for p in &m.vertices {
        let row = nalgebra::Vector4::new(2.0 * p.x, 2.0 * p.y, 2.0 * p.z, 1.0);
        a += row * row.transpose();
        b += row * p.norm_squared();
    }
    let s = a.lu().solve(&b).unwrap();
    let c = Vec3::new(s[0], s[1], s[2]);
    let r = (s[3] + c.norm_squared()).sqrt();
    (c, r, m.vertices.iter().map(|p| ((p - c).norm() - r).abs() / r).fold(0.0, f64::max))
}

#[test]
fn inversion_of_a_point() {
    let q = invert_point(Vec3::new(2.0, 0.0, 0.0), Vec3::zeros());
    assert!((q - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
}

#[test]
fn inversion_is_an_involution() {
    let m = clifford_torus(16);
    let twice = sphere_inversion(&sphere_inversion(&m, Vec3::zeros()).unwrap(), Vec3::zeros()).unwrap();
    for (p, q) in m.vertices.iter().zip(&twice.vertices) {
        assert!((p - q).norm() < 1e-10);
    }
}

#[test]
fn inversion_maps_spheres_to_spheres() {
    let m = build_icosphere(4, 1.0).unwrap().translated(Vec3::new(3.0, 0.0, 0.0));
    let image = sphere_inversion(&m, Vec3::zeros()).unwrap();
    assert!(sphere_fit(&image).2 <= 1e-6);
}

#[test]
fn inverted_sphere_keeps_energy() {
    let m = build_icosphere(5, 1.0).unwrap().translated(Vec3::new(3.0, 0.5, 0.0));
    let check = willmore_invariance_check(&m, Vec3::zeros()).unwrap();
    assert!(rel(check.w_after, 4.0 * PI) <= 1e-2);
}

#[test]
fn torus_invariance_gap_shrinks_under_refinement() {
    let a = Vec3::new(4.0, 0.0, 0.0);
    let coarse = willmore_invariance_check(&clifford_torus(64), a).unwrap();
    let fine = willmore_invariance_check(&clifford_torus(128), a).unwrap();
    assert!(fine.rel_gap <= 0.02);
    assert!(fine.rel_gap < coarse.rel_gap);
}

#[test]
fn center_on_the_surface_is_rejected() {
    let m = build_icosphere(2, 1.0).unwrap();
    let a = m.vertices[0];
    assert!(matches!(sphere_inversion(&m, a), Err(MobiusError::CenterOnSurface { .. })));
}

#[test]
fn stereographic_map_values() {
    assert!((stereographic_t(Vec3::zeros()).unwrap() - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    assert!((stereographic_t(Vec3::new(0.0, 0.0, 3.0)).unwrap() - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-15);
}

#[test]
fn stereographic_map_of_half_sphere() {
    let m = build_icosphere(4, 0.5).unwrap();
    let image = apply_stereographic_t(&m).unwrap();
    let (c, r, dev) = sphere_fit(&image);
    assert!(dev <= 1e-6);
    assert!((c - Vec3::new(0.0, 0.0, -5.0 / 3.0)).norm() < 1e-6);
    assert!((r - 4.0 / 3.0).abs() < 1e-6);
}

#[test]
fn blow_down_on_spheres_is_constant() {
    let m = build_icosphere(4, 1.0).unwrap();
    let s = blow_down_sweep(&m, Vec3::new(1.0, 0.2, 0.0), &geom(4.0, 64.0, 5)).unwrap();
    assert!(s.t_values.iter().all(|&t| rel(t, sphere_t()) <= 1e-2));
}

#[test]
fn blow_down_exponent_on_egg_torus() {
    let s = blow_down_sweep(&egg_torus(64), Vec3::new(1.0, 0.3, 0.2), &geom(8.0, 256.0, 8)).unwrap();
    let p = s.fitted_exponent.unwrap();
    assert!((p - 1.0).abs() <= 0.3, "exponent {p}");
    let gaps: Vec<f64> = s.t_values.iter().map(|t| (t - s.reference_t).abs()).collect();
    assert!(gaps.last().unwrap() < gaps.first().unwrap());
}

#[test]
fn symmetric_torus_decays_faster() {
    let s = blow_down_sweep(&clifford_torus(64), Vec3::new(1.0, 0.3, 0.2), &geom(8.0, 256.0, 8)).unwrap();
    assert!(s.fitted_exponent.unwrap() > 1.5);
}

#[test]
fn single_radius_sweep_has_no_fit() {
    let s = blow_down_sweep(&clifford_torus(16), Vec3::x(), &[10.0]).unwrap();
    assert_eq!(s.params.len(), 1);
    assert!(s.fitted_exponent.is_none());
}

#[test]
fn non_monotone_radii_are_rejected() {
    assert!(blow_down_sweep(&clifford_torus(16), Vec3::x(), &[10.0, 5.0]).is_err());
}

#[test]
fn blow_up_tail_approaches_sphere_ratio() {
    let m = clifford_torus(64);
    let s = blow_up_sweep(&m, default_ray_vertex(&m), &geom(0.5, 0.02, 8), &BlowUpConfig::default()).unwrap();
    let (_, t, _) = s.last_valid().unwrap();
    assert!(rel(t, sphere_t()) <= 0.05, "tail {t}");
}

#[test]
fn blow_up_of_sphere_stays_spherical() {
    let m = build_icosphere(4, 1.0).unwrap();
    let s = blow_up_sweep(&m, 0, &[0.5, 0.1, 0.02], &BlowUpConfig::default()).unwrap();
    assert!(s.t_values.iter().all(|&t| rel(t, sphere_t()) <= 1e-2));
}

#[test]
fn far_blow_up_center_matches_blow_down() {
    let m = clifford_torus(64);
    let base = evaluate(&m).unwrap().t;
    let s = blow_up_sweep(&m, default_ray_vertex(&m), &[200.0], &BlowUpConfig::default()).unwrap();
    assert!(rel(s.t_values[0], base) <= 1e-3);
}

#[test]
fn matching_a_ratio_by_inversion() {
    let m = clifford_torus(48);
    let t0 = evaluate(&m).unwrap().t;
    let target = 0.5 * (t0 + sphere_t());
    let c = match_t_by_inversion(&m, target, &MatchConfig::default()).unwrap();
    assert!(c.iterations <= 60);
    assert!((c.achieved_t - target).abs() <= 1e-2 * target);
}

#[test]
fn boundary_targets_are_rejected() {
    let m = clifford_torus(32);
    let t0 = evaluate(&m).unwrap().t;
    assert!(match_t_by_inversion(&m, t0, &MatchConfig::default()).is_err());
    assert!(match_t_by_inversion(&m, sphere_t(), &MatchConfig::default()).is_err());
}

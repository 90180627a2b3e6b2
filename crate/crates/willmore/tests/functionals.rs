mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use willmore::compute_curvatures;
use willmore::functionals::{
    displace_normal, evaluate, fmt_sig, gradient_t, gradient_w, helfrich_energy, optimal_spontaneous_curvature,
    report,
};
use willmore::mesh::build_icosphere;
use willmore::{FunctionalReport, TriangleMesh, Vec3};

use common::{clifford_torus, egg_torus, rel, smooth_field};

fn sphere5(r: f64) -> TriangleMesh {
    build_icosphere(5, r).unwrap()
}

#[test]
fn sphere_energy_and_ratio() {
    let rep = evaluate(&sphere5(1.0)).unwrap();
    assert!(rel(rep.w, 4.0 * PI) <= 5e-3);
    assert!(rel(rep.t, 4.0 * PI.sqrt()) <= 5e-3);
    assert!(rel(rep.a, 4.0 * PI) <= 3e-3);
    assert!(rel(rep.v, 4.0 * PI / 3.0) <= 5e-3);
    assert!(rel(rep.iso, (36.0 * PI).cbrt()) <= 1e-2);
}

#[test]
fn sphere_scale_invariance() {
    let (a, b) = (evaluate(&sphere5(1.0)).unwrap(), evaluate(&sphere5(7.3)).unwrap());
    assert_relative_eq!(a.w, b.w, max_relative = 1e-10);
    let c = evaluate(&sphere5(3.0)).unwrap();
    assert_relative_eq!(a.t, c.t, max_relative = 1e-10);
    let d = evaluate(&sphere5(2.0)).unwrap();
    assert_relative_eq!(d.a, 4.0 * a.a, max_relative = 1e-10);
    assert_relative_eq!(d.v, 8.0 * a.v, max_relative = 1e-10);
    assert_relative_eq!(d.iso, a.iso, max_relative = 1e-10);
}

#[test]
fn flipped_orientation_negates_ratio() {
    let rep = evaluate(&sphere5(1.0).flipped()).unwrap();
    assert!(rel(rep.t, -4.0 * PI.sqrt()) <= 5e-3);
}

#[test]
fn clifford_torus_values() {
    let rep = evaluate(&clifford_torus(128)).unwrap();
    assert!(rel(rep.w, 2.0 * PI * PI) <= 1e-2);
    assert!(rel(rep.v, 2.0 * PI * PI * 2f64.sqrt()) <= 1e-2);
}

#[test]
fn lower_bounds_hold() {
    for m in [sphere5(1.0), clifford_torus(64), egg_torus(64)] {
        let rep = evaluate(&m).unwrap();
        assert!(rep.w >= 4.0 * PI - 1e-2);
        assert!(rep.w >= rep.t * rep.t / 4.0 - 1e-8);
        assert!(rep.iso >= (36.0 * PI).cbrt() - 1e-2);
    }
}

#[test]
fn helfrich_on_sphere() {
    let c = compute_curvatures(&sphere5(1.0)).unwrap();
    assert!(rel(helfrich_energy(&c, 0.0), 4.0 * PI) <= 5e-3);
    assert!(helfrich_energy(&c, 1.0).abs() <= 5e-3);
    assert!(rel(helfrich_energy(&c, 2.0), 4.0 * PI) <= 1e-2);
    let (c0, inf) = optimal_spontaneous_curvature(&c).unwrap();
    assert!((c0 - 1.0).abs() < 5e-3);
    assert!(inf.abs() < 5e-3);
}

#[test]
fn helfrich_optimum_on_torus() {
    let m = clifford_torus(64);
    let c = compute_curvatures(&m).unwrap();
    let rep = report(&m, &c).unwrap();
    let (c0, inf) = optimal_spontaneous_curvature(&c).unwrap();
    assert_relative_eq!(inf, rep.w - rep.t * rep.t / 4.0, max_relative = 1e-10);
    assert_relative_eq!(helfrich_energy(&c, c0), inf, max_relative = 1e-10);
    let scaled = compute_curvatures(&m.scaled(2.5)).unwrap();
    let (c1, inf1) = optimal_spontaneous_curvature(&scaled).unwrap();
    assert_relative_eq!(c1, c0 / 2.5, max_relative = 1e-10);
    assert_relative_eq!(inf1, inf, max_relative = 1e-10);
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn gradients_vanish_on_spheres() {
    let m = sphere5(1.0);
    let c = compute_curvatures(&m).unwrap();
    let rep = report(&m, &c).unwrap();
    assert!(max_abs(&gradient_t(&c, &rep)) <= 0.05);
    assert!(max_abs(&gradient_w(&c)) <= 0.1);
}

#[test]
fn ratio_gradient_is_nonzero_on_torus() {
    let m = clifford_torus(64);
    let c = compute_curvatures(&m).unwrap();
    let rep = report(&m, &c).unwrap();
    assert!(max_abs(&gradient_t(&c, &rep)) > 0.1);
}

#[test]
fn willmore_gradient_scales_inverse_cubically() {
    let m = egg_torus(48);
    let g1 = max_abs(&gradient_w(&compute_curvatures(&m).unwrap()));
    let g2 = max_abs(&gradient_w(&compute_curvatures(&m.scaled(2.0)).unwrap()));
    assert_relative_eq!(g2, g1 / 8.0, max_relative = 1e-10);
}

fn fd_error(mesh: &TriangleMesh, seed: u64, h: f64, pick: fn(&FunctionalReport) -> f64, willmore: bool) -> f64 {
    let c = compute_curvatures(mesh).unwrap();
    let rep = report(mesh, &c).unwrap();
    let g = if willmore { gradient_w(&c) } else { gradient_t(&c, &rep) };
    let xi = smooth_field(mesh, seed);
    let f = |s: f64| pick(&evaluate(&displace_normal(mesh, &c.normals, &xi, s)).unwrap());
    rel((f(h) - f(-h)) / (2.0 * h), c.inner(&g, &xi))
}

#[test]
fn ratio_gradient_matches_finite_differences() {
    let m = egg_torus(512);
    for seed in 0..4 {
        let e = fd_error(&m, seed, 1e-5, |r| r.t, false);
        assert!(e <= 1e-4, "seed {seed}: {e:e}");
    }
}

#[test]
fn willmore_gradient_matches_finite_differences() {
    let m = egg_torus(512);
    for seed in 0..4 {
        let e = [3e-3, 1e-3, 1e-4].iter().map(|&h| fd_error(&m, seed, h, |r| r.w, true)).fold(f64::INFINITY, f64::min);
        assert!(e <= 1e-3, "seed {seed}: {e:e}");
    }
}

#[test]
fn finite_difference_error_decreases_under_refinement() {
    let errs: Vec<f64> = [48, 96, 192].iter().map(|&n| fd_error(&egg_torus(n), 3, 1e-5, |r| r.w, true)).collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn significant_digit_formatting() {
    assert_eq!(fmt_sig(4.0 * PI), "1.25663706144e1");
    assert_eq!(fmt_sig(-1.5e-9), "-1.50000000000e-9");
    assert_eq!(fmt_sig(f64::NAN), "NaN");
}

#[test]
fn degenerate_mesh_is_rejected() {
    let mut m = sphere5(1.0);
    let v = m.faces[0][0];
    let w = m.faces[0][1];
    m.vertices[w] = m.vertices[v];
    assert!(evaluate(&m).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_and_ratio_are_similarity_invariant(
        s in 0.05f64..20.0,
        dx in -5.0f64..5.0,
        dy in -5.0f64..5.0,
        dz in -5.0f64..5.0,
    ) {
        let m = egg_torus(24);
        let base = evaluate(&m).unwrap();
        let moved = evaluate(&m.scaled(s).translated(Vec3::new(dx, dy, dz))).unwrap();
        prop_assert!(rel(moved.w, base.w) < 1e-9);
        prop_assert!(rel(moved.t, base.t) < 1e-9);
        prop_assert!(rel(moved.iso, base.iso) < 1e-9);
    }

    #[test]
    fn willmore_floor_holds_on_perturbed_surfaces(seed in 0u64..1000, amp in 0.0f64..0.05) {
        let m = sphere5(1.0);
        let c = compute_curvatures(&m).unwrap();
        let xi = smooth_field(&m, seed);
        let rep = evaluate(&displace_normal(&m, &c.normals, &xi, amp)).unwrap();
        prop_assert!(rep.w >= rep.t * rep.t / 4.0 - 1e-8);
    }
}

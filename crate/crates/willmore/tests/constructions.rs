use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore::compute_curvatures;
use willmore::constructions::bump::patch_total_mean_curvature;
use willmore::constructions::catenoid::{catenoid_band, catenoid_t_min, disjointness_ratio};
use willmore::constructions::glued::{cubic_error, inverse_error};
use willmore::constructions::{
    biharmonic_annulus, bump_graph_surface, build_gamma_t, build_sigma_g, catenoid_bridge_params,
    connected_sum_report, glued_graph_region, solve_t_for_target, AnnulusBoundaryData, BumpProfile,
    ConnectedSumParams, PlanarPatchHost, SigmaConfig, SigmaVariant,
};
use willmore::constructions::ConstructionError;
use willmore::fit::power_law_exponent;
use willmore::functionals::evaluate;
use willmore::mesh::validate;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn bridge_parameters_satisfy_defining_relations() {
    for t in [1.5, 2.0, 3.0, 5.0] {
        let p = catenoid_bridge_params(t).unwrap();
        let rhs = t.tanh() + t / t.cosh().powi(2);
        let s = p.sigma_t;
        assert!(((1.0 + s * s) / (2.0 * s) - rhs).abs() < 1e-12);
        assert!((p.lambda_t * t.cosh().powi(2) - 2.0 * s / (1.0 - s * s)).abs() < 1e-12 * p.lambda_t.abs().max(1.0));
        assert!(disjointness_ratio(t) > 1.0);
    }
}

#[test]
fn bridge_sigma_at_two() {
    let rhs: f64 = 2f64.tanh() + 2.0 / 2f64.cosh().powi(2);
    let expect = rhs - (rhs * rhs - 1.0).sqrt();
    let s = catenoid_bridge_params(2.0).unwrap().sigma_t;
    assert!((s - expect).abs() < 1e-12);
    assert!((s - 0.63440).abs() < 1e-4);
}

#[test]
fn bridge_sigma_tends_to_one() {
    let s: Vec<f64> = [3.0, 4.0, 5.0].iter().map(|&t| catenoid_bridge_params(t).unwrap().sigma_t).collect();
    assert!(s[0] < s[1] && s[1] < s[2] && s[2] < 1.0);
}

#[test]
fn intersecting_spheres_are_rejected() {
    assert!(matches!(catenoid_bridge_params(0.1), Err(ConstructionError::SpheresIntersect { .. })));
    let t_min = catenoid_t_min();
    assert!((t_min.tanh() + t_min / t_min.cosh().powi(2) - 1.0).abs() < 1e-12);
    assert!(catenoid_bridge_params(t_min * 0.99).is_err());
}

#[test]
fn gamma_energy_matches_formula() {
    for t in [1.5, 2.0, 3.0] {
        let w = evaluate(&build_gamma_t(t, 96).unwrap()).unwrap().w;
        let predicted = 8.0 * PI - 4.0 * PI * (1.0 - t.tanh());
        assert!((catenoid_bridge_params(t).unwrap().gamma_energy() - predicted).abs() < 1e-12);
        assert!(rel(w, predicted) <= 0.02, "t = {t}: {w} vs {predicted}");
    }
}

#[test]
fn gamma_energy_increases_with_t() {
    let w2 = evaluate(&build_gamma_t(2.0, 96).unwrap()).unwrap().w;
    let w3 = evaluate(&build_gamma_t(3.0, 96).unwrap()).unwrap().w;
    assert!(w2 < w3 && w3 < 8.0 * PI);
}

#[test]
fn catenoid_is_minimal() {
    let (t, nz, nphi) = (1.0, 200, 400);
    let m = catenoid_band(t, nz, nphi).unwrap();
    let c = compute_curvatures(&m).unwrap();
    let w: f64 = m
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, p)| p.z.abs() < t - 1e-9)
        .map(|(i, _)| 0.25 * c.mean[i].powi(2) * c.area[i])
        .sum();
    assert!(w <= 1e-6, "W = {w:e}");
}

fn sigma(t: f64, g: usize, v: SigmaVariant) -> willmore::TriangleMesh {
    build_sigma_g(t, g, v, &SigmaConfig::default()).unwrap()
}

#[test]
fn sigma_meshes_have_the_requested_genus() {
    for (t, g, v) in [(3.0, 0, SigmaVariant::Two), (3.0, 1, SigmaVariant::One), (3.0, 1, SigmaVariant::Two), (3.0, 2, SigmaVariant::One)] {
        let d = validate(&sigma(t, g, v));
        assert!(d.is_valid(), "{t} {g} {v:?}");
        assert_eq!(d.genus, Some(g));
    }
}

#[test]
fn sigma_two_approaches_doubled_sphere_ratio() {
    let rep = evaluate(&sigma(3.0, 0, SigmaVariant::Two)).unwrap();
    assert!(rel(rep.t, (32.0 * PI).sqrt()) <= 0.1);
    assert!(rep.w < 8.0 * PI);
    assert!(rel(rep.iso, (72.0 * PI).cbrt()) <= 0.1);
}

#[test]
fn sigma_one_ratio_decreases_and_iso_grows() {
    let reps: Vec<_> = [2.0, 2.5, 3.0].iter().map(|&t| evaluate(&sigma(t, 1, SigmaVariant::One)).unwrap()).collect();
    for r in &reps {
        assert!(r.w < 8.0 * PI);
    }
    assert!(reps.windows(2).all(|w| w[1].t < w[0].t));
    assert!(reps.windows(2).all(|w| w[1].iso > w[0].iso));
}

#[test]
fn sigma_rejects_small_handles() {
    let cfg = SigmaConfig { eps_handle: Some(1e-3), ..SigmaConfig::default() };
    assert!(matches!(build_sigma_g(3.0, 1, SigmaVariant::One, &cfg), Err(ConstructionError::HandleOverlap(_))));
}

fn bump() -> BumpProfile {
    BumpProfile::Smooth { radius: 0.4, height: 1.0 }
}

#[test]
fn bump_patch_integral_scales_with_copies() {
    let host = PlanarPatchHost::slab(64, 0.5).unwrap();
    let h = |n: usize, t: f64| patch_total_mean_curvature(&host, &bump_graph_surface(&host, &bump(), n, t).unwrap()).unwrap();
    let (one, two) = (h(1, 1.0), h(2, 1.0));
    assert!(rel(two, 2.0 * one) <= 0.05, "{one} {two}");
    for n in [1, 2] {
        assert!((h(n, -1.0) + h(n, 1.0)).abs() <= 1e-8);
    }
}

#[test]
fn bump_sweep_changes_sign() {
    let host = PlanarPatchHost::slab(32, 0.5).unwrap();
    let values: Vec<f64> = (0..=20)
        .map(|k| {
            let t = -1.0 + 0.1 * k as f64;
            patch_total_mean_curvature(&host, &bump_graph_surface(&host, &bump(), 1, t).unwrap()).unwrap()
        })
        .collect();
    assert!(values.first().unwrap() * values.last().unwrap() < 0.0);
    let jump = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let span = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(jump <= 0.25 * span);
}

#[test]
fn bump_targets() {
    let host = PlanarPatchHost::slab(32, 0.5).unwrap();
    let base = evaluate(&host.mesh).unwrap().t;
    let same = solve_t_for_target(&host, &bump(), base).unwrap();
    assert_eq!(same.t_amp, 0.0);
    let zero = solve_t_for_target(&host, &bump(), base - 0.3).unwrap();
    assert!((zero.achieved - (base - 0.3)).abs() <= 1e-2);
    match solve_t_for_target(&host, &bump(), 50.0) {
        Ok(s) => assert!((s.achieved - 50.0).abs() <= 1e-2),
        Err(ConstructionError::TargetUnreached { best, .. }) => assert!(best > base),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn biharmonic_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let gamma = rng.gen_range(0.1..0.8);
        let mut draw = || std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let bc = AnnulusBoundaryData { radial: draw(), cos2: draw(), sin2: draw() };
        let sol = biharmonic_annulus(gamma, &bc).unwrap();
        assert!(sol.boundary_mismatch(&bc) <= 1e-10);
        for _ in 0..100 {
            let r = rng.gen_range(gamma..1.0);
            let th = rng.gen_range(0.0..2.0 * PI);
            assert!(sol.bilaplacian(r, th).abs() <= 1e-8);
        }
    }
}

#[test]
fn biharmonic_generic_data_small_gamma() {
    let bc = AnnulusBoundaryData { radial: [0.3, -0.2, 0.5, 0.1], cos2: [0.1, 0.4, -0.3, 0.2], sin2: [-0.5, 0.2, 0.1, 0.3] };
    let sol = biharmonic_annulus(0.1, &bc).unwrap();
    for i in 0..=20 {
        let r = 0.1 + 0.9 * i as f64 / 20.0;
        assert!(sol.bilaplacian(r, 0.7).abs() <= 1e-8);
    }
}

fn params(alpha: f64, gamma: f64) -> ConnectedSumParams {
    ConnectedSumParams::new(Matrix2::new(2.0, 0.0, 0.0, 0.0), Matrix2::new(1.5, 0.0, 0.0, -0.5), alpha, 4.0, gamma)
}

#[test]
fn strip_integrals_scale_as_three_halves() {
    let phi = inverse_error([0.2, 0.1, -0.3]);
    let psi = cubic_error([0.3, -0.2, 0.1, 0.4], 0.5);
    let alphas = [1e-3, 1e-4, 1e-5, 1e-6];
    let (mut strips, mut removed) = (vec![], vec![]);
    for &a in &alphas {
        let (_, rep) = glued_graph_region(params(a, 0.3), &phi, &psi).unwrap();
        strips.push(rep.strip_outer.abs() + rep.strip_inner.abs());
        removed.push((rep.removed_disk - rep.two_beta_pi_e).abs());
        assert!((rep.biharmonic_integral - rep.biharmonic_closed_form).abs() <= 1e-10);
        assert!(rep.mean_curvature_ratio.is_finite());
    }
    let p = power_law_exponent(&alphas, &strips).unwrap();
    assert!((p - 1.5).abs() <= 0.3, "strip exponent {p}");
    let q = power_law_exponent(&alphas, &removed).unwrap();
    assert!(q >= 1.5 - 0.3, "removed-disk exponent {q}");
}

#[test]
fn biharmonic_coefficient_scales_as_gamma_squared_alpha() {
    let phi = inverse_error([0.2, 0.1, -0.3]);
    let psi = cubic_error([0.3, -0.2, 0.1, 0.4], 0.5);
    let c = |a: f64, g: f64| {
        let p = params(a, g);
        let (graph, _) = glued_graph_region(p, &phi, &psi).unwrap();
        (graph.solution.radial[1] - 2.0 * p.beta() * p.e).abs()
    };
    let alphas = [1e-4, 1e-5, 1e-6];
    let pa = power_law_exponent(&alphas, &alphas.map(|a| c(a, 0.3))).unwrap();
    assert!((pa - 1.0).abs() <= 0.3, "{pa}");
    let gammas = [0.04, 0.02, 0.01];
    let pg = power_law_exponent(&gammas, &gammas.map(|g| c(1e-7, g))).unwrap();
    assert!((pg - 2.0).abs() <= 0.3, "{pg}");
}

#[test]
fn connected_sum_leading_coefficient() {
    let p = ConnectedSumParams::new(Matrix2::new(1.0, 0.0, 0.0, -1.0), Matrix2::new(1.0, 0.0, 0.0, -1.0), 1e-4, 4.0, 0.2);
    assert_eq!(p.e, 0.0);
    let phi = inverse_error([0.0; 3]);
    let psi = cubic_error([0.0; 4], 0.0);
    let rep = connected_sum_report(p, &phi, &psi, 1.0, 1.0).unwrap();
    assert!((rep.leading_coefficient + 6.0).abs() < 1e-12);
    assert!(rep.predicted_delta_w < 0.0);
}

#[test]
fn connected_sum_energy_scales_as_alpha_squared() {
    let phi = inverse_error([0.0; 3]);
    let psi = cubic_error([0.0; 4], 0.0);
    let alphas = [4e-4, 2e-4, 1e-4];
    let mut predicted = vec![];
    let mut graph = vec![];
    for &a in &alphas {
        let rep = connected_sum_report(params(a, 0.2), &phi, &psi, 1.0, 1.0).unwrap();
        predicted.push(rep.predicted_delta_w.abs());
        graph.push(rep.graph_delta_w.abs());
    }
    assert!((predicted[1] / predicted[0] - 0.25).abs() < 1e-12);
    let p = power_law_exponent(&alphas, &graph).unwrap();
    assert!((p - 2.0).abs() <= 0.2, "{p}");
}

#[test]
fn connected_sum_rejects_bad_host() {
    let phi = inverse_error([0.0; 3]);
    let psi = cubic_error([0.0; 4], 0.0);
    assert!(connected_sum_report(params(1e-4, 0.2), &phi, &psi, 1.0, 0.0).is_err());
}

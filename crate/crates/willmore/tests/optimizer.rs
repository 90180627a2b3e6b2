mod common;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore::compute_curvatures;
use willmore::fit::power_law_exponent;
use willmore::functionals::{displace_normal, evaluate};
use willmore::mobius::sphere_t;
use willmore::optimizer::{
    descent_direction, estimate_beta0, perturbed_sphere, project_direction, run_flow, FlowConfig, FlowOutcome,
    FlowTrace, OptimizerError,
};

use common::{clifford_torus, egg_torus};

fn outcome(r: Result<FlowOutcome, OptimizerError>) -> FlowOutcome {
    match r {
        Ok(o) => o,
        Err(e) => e.partial().cloned().unwrap_or_else(|| panic!("no trace: {e}")),
    }
}

#[test]
fn projection_is_orthogonal_on_torus() {
    let m = clifford_torus(48);
    let c = compute_curvatures(&m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let gw: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gt: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (d, _) = project_direction(&gw, &gt, &c.area).unwrap();
        let cos = c.inner(&d, &gt) / (c.inner(&d, &d) * c.inner(&gt, &gt)).sqrt();
        assert!(cos.abs() <= 1e-10, "{cos:e}");
    }
}

#[test]
fn projection_degenerates_on_vanishing_constraint_gradient() {
    let w = vec![1.0; 4];
    assert!(matches!(project_direction(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4], &w), Err(OptimizerError::SphereDegenerate(_))));
}

#[test]
fn smoothed_direction_is_orthogonal_to_constraint_gradient() {
    let m = egg_torus(48);
    let c = compute_curvatures(&m).unwrap();
    let rep = willmore::functionals::report(&m, &c).unwrap();
    let gt = willmore::functionals::gradient_t(&c, &rep);
    let (d, _) = descent_direction(&m).unwrap();
    let cos = c.inner(&d, &gt) / (c.inner(&d, &d) * c.inner(&gt, &gt)).sqrt();
    assert!(cos.abs() <= 1e-10, "{cos:e}");
}

#[test]
fn constraint_drift_is_second_order() {
    let m = egg_torus(128);
    let c = compute_curvatures(&m).unwrap();
    let t0 = evaluate(&m).unwrap().t;
    let (d, _) = descent_direction(&m).unwrap();
    let peak = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let moves = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let drift: Vec<f64> =
        moves.iter().map(|&s| (evaluate(&displace_normal(&m, &c.normals, &d, s / peak)).unwrap().t - t0).abs()).collect();
    let p = power_law_exponent(&moves, &drift).unwrap();
    assert!(p >= 1.7, "exponent {p}, drift {drift:?}");
}

#[test]
fn invalid_configurations_are_rejected() {
    let m = perturbed_sphere(2, 0.03, 1).unwrap();
    for cfg in [
        FlowConfig { step: 0.0, ..FlowConfig::default() },
        FlowConfig { constraint_tolerance: -1.0, ..FlowConfig::default() },
        FlowConfig { target_r: f64::NAN, ..FlowConfig::default() },
    ] {
        assert!(matches!(run_flow(&m, &cfg), Err(OptimizerError::Config(_))));
    }
}

#[test]
fn flow_keeps_invariants() {
    let target = sphere_t() * 1.02;
    let cfg = FlowConfig { target_r: target, ..FlowConfig::default() };
    let o = outcome(run_flow(&perturbed_sphere(3, 0.03, 7).unwrap(), &cfg));
    let recs = &o.trace.records;
    assert!(recs.iter().all(|r| r.w >= r.t * r.t / 4.0 - 1e-8));
    let last = o.trace.last().unwrap();
    assert!((last.t - target).abs() <= 1e-3);
    assert!(last.w < 8.0 * PI);
    assert!(last.w <= recs[0].w);
    let accepted: Vec<_> = recs.iter().filter(|r| r.accepted && (r.t - target).abs() <= 1e-3).collect();
    assert!(accepted.windows(2).all(|w| w[1].w <= w[0].w + 1e-12));
    let rep = evaluate(&o.mesh).unwrap();
    assert!((rep.a - 1.0).abs() <= 1e-9);
}

#[test]
fn flow_to_sphere_ratio_rounds_the_surface() {
    let cfg = FlowConfig { target_r: sphere_t(), ..FlowConfig::default() };
    let o = outcome(run_flow(&perturbed_sphere(3, 0.03, 7).unwrap(), &cfg));
    let w = o.trace.last().unwrap().w;
    assert!(((w - 4.0 * PI) / (4.0 * PI)).abs() <= 0.02, "W = {w}");
}

#[test]
fn flow_is_deterministic() {
    let cfg = FlowConfig { target_r: sphere_t() * 1.02, max_iters: 15, ..FlowConfig::default() };
    let m = perturbed_sphere(2, 0.03, 3).unwrap();
    let a = outcome(run_flow(&m, &cfg)).trace.to_csv("x");
    let b = outcome(run_flow(&m, &cfg)).trace.to_csv("x");
    assert_eq!(a, b);
}

#[test]
fn iteration_cap_returns_partial_trace() {
    let cfg = FlowConfig { target_r: sphere_t() * 1.02, max_iters: 3, ..FlowConfig::default() };
    match run_flow(&perturbed_sphere(2, 0.03, 3).unwrap(), &cfg) {
        Err(e @ OptimizerError::MaxIterations { .. }) => assert!(!e.partial().unwrap().trace.records.is_empty()),
        Err(OptimizerError::Stagnation { .. }) => {}
        other => panic!("{:?}", other.map(|o| o.trace.records.len())),
    }
}

#[test]
fn trace_csv_layout() {
    let cfg = FlowConfig { target_r: sphere_t() * 1.02, max_iters: 2, ..FlowConfig::default() };
    let o = outcome(run_flow(&perturbed_sphere(2, 0.03, 3).unwrap(), &cfg));
    let csv = o.trace.to_csv("willmore test");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# willmore test"));
    assert_eq!(lines.next(), Some(FlowTrace::CSV_HEADER));
    assert_eq!(lines.count(), o.trace.records.len());
}

#[test]
fn beta0_grid_is_monotone_and_below_8pi() {
    let table = estimate_beta0(&[7.2, 7.6, 8.0, 8.5], 3, 3, &FlowConfig::default());
    assert_eq!(table.rows.len(), 4);
    assert!(table.monotone);
    assert!(table.below_8pi);
    for row in &table.rows {
        assert!(row.best_w >= row.r * row.r / 4.0 - 1e-3);
    }
    let csv = table.to_csv("grid");
    assert!(csv.lines().nth(1).unwrap().starts_with("R,best_W"));
}

#[test]
fn beta0_near_the_doubled_sphere_ratio() {
    let table = estimate_beta0(&[9.8], 2, 3, &FlowConfig::default());
    let w = table.rows[0].best_w;
    assert!(w >= 9.8 * 9.8 / 4.0 - 1e-3, "{w}");
    assert!(w < 8.0 * PI);
}

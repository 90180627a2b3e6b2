mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore::axisym::{
    axisym_functionals, check_sixpi_bound, check_theta_window_theorem, make_hump_stack_curve,
    make_slope_counterexample_curve, random_window_curves, SixPiVerdict, WindowVerdict,
};
use willmore::constructions::glued::{cubic_error, inverse_error};
use willmore::constructions::{
    biharmonic_annulus, build_gamma_t, build_sigma_g, catenoid_bridge_params, glued_graph_region,
    AnnulusBoundaryData, ConnectedSumParams, SigmaConfig, SigmaVariant,
};
use willmore::fit::{linear_fit, power_law_exponent};
use willmore::functionals::{displace_normal, evaluate, gradient_t, gradient_w, report};
use willmore::mesh::build_icosphere;
use willmore::mobius::{blow_down_sweep, blow_up_sweep, default_ray_vertex, sphere_t, willmore_invariance_check, BlowUpConfig};
use willmore::optimizer::{estimate_beta0, perturbed_sphere, run_flow, FlowConfig, FlowOutcome};
use willmore::{compute_curvatures, Vec3};

use common::{clifford_torus, egg_torus, geom, rel, smooth_field};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn sphere_baselines() -> Verdict {
    let rep = evaluate(&build_icosphere(5, 1.0).unwrap()).unwrap();
    let (ew, et, ei) = (rel(rep.w, 4.0 * PI), rel(rep.t, sphere_t()), rel(rep.iso, (36.0 * PI).cbrt()));
    verdict(
        ew <= 5e-3 && et <= 5e-3 && ei <= 1e-2,
        format!("W {:.6} ({ew:.2e}), T {:.6} ({et:.2e}), iso {:.6} ({ei:.2e})", rep.w, rep.t, rep.iso),
    )
}

fn clifford() -> Verdict {
    let rep = evaluate(&clifford_torus(128)).unwrap();
    let e = rel(rep.w, 2.0 * PI * PI);
    verdict(e <= 1e-2, format!("W {:.6} ({e:.2e})", rep.w))
}

fn conformal_invariance() -> Verdict {
    let a = Vec3::new(4.0, 0.0, 0.0);
    let coarse = willmore_invariance_check(&clifford_torus(64), a).unwrap();
    let fine = willmore_invariance_check(&clifford_torus(128), a).unwrap();
    verdict(
        fine.rel_gap <= 0.02 && fine.rel_gap < coarse.rel_gap,
        format!("gap 64² {:.3e}, 128² {:.3e}", coarse.rel_gap, fine.rel_gap),
    )
}

fn blow_down_blow_up() -> Verdict {
    let down = blow_down_sweep(&egg_torus(64), Vec3::new(1.0, 0.3, 0.2), &geom(8.0, 256.0, 8)).unwrap();
    let exponent = down.fitted_exponent.unwrap_or(f64::NAN);
    let torus = clifford_torus(64);
    let t_values = geom(0.5, 0.02, 8);
    let up = blow_up_sweep(&torus, default_ray_vertex(&torus), &t_values, &BlowUpConfig::default()).unwrap();
    let tail = up.last_valid().map(|(_, t, _)| t).unwrap_or(f64::NAN);
    let e = rel(tail, sphere_t());
    verdict(
        (exponent - 1.0).abs() <= 0.3 && e <= 0.05,
        format!("blow-down exponent {exponent:.3}, blow-up tail T {tail:.5} ({e:.2e})"),
    )
}

fn sigma(t: f64, genus: usize, variant: SigmaVariant) -> willmore::FunctionalReport {
    evaluate(&build_sigma_g(t, genus, variant, &SigmaConfig::default()).unwrap()).unwrap()
}

fn catenoid_bridge() -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    for t in [1.5, 2.0, 3.0] {
        let w = evaluate(&build_gamma_t(t, 96).unwrap()).unwrap().w;
        let predicted = catenoid_bridge_params(t).unwrap().gamma_energy();
        let e = rel(w, predicted);
        pass &= e <= 0.02;
        detail += &format!("Γ_{t} W {w:.4} vs {predicted:.4}; ");
    }
    let s20 = sigma(3.0, 0, SigmaVariant::Two);
    let e = rel(s20.t, (32.0 * PI).sqrt());
    pass &= e <= 0.1;
    detail += &format!("T(Σ²⁰₃) {:.4} ({e:.2e}); ", s20.t);
    let cases = [
        (3.0, 0, SigmaVariant::Two),
        (3.0, 1, SigmaVariant::One),
        (3.0, 1, SigmaVariant::Two),
        (2.0, 1, SigmaVariant::One),
        (3.0, 2, SigmaVariant::One),
    ];
    let worst = cases.iter().map(|&(t, g, v)| sigma(t, g, v).w).fold(0.0, f64::max);
    pass &= worst < 8.0 * PI;
    detail += &format!("max W(Σ) {worst:.4}");
    verdict(pass, detail)
}

fn isoperimetric_remark() -> Verdict {
    let target = (72.0 * PI).cbrt();
    let iso2 = sigma(3.0, 1, SigmaVariant::Two).iso;
    let e = rel(iso2, target);
    let iso1: Vec<f64> = [2.0, 2.5, 3.0].iter().map(|&t| sigma(t, 1, SigmaVariant::One).iso).collect();
    let increasing = iso1.windows(2).all(|w| w[1] > w[0]);
    verdict(
        e <= 0.1 && increasing,
        format!("iso(Σ²¹₃) {iso2:.4} ({e:.2e}); iso(Σ¹¹_t) {iso1:.4?}"),
    )
}

fn axisymmetric() -> Verdict {
    let curve = make_slope_counterexample_curve(0.3, 0.01, 20_000).unwrap();
    let rep = axisym_functionals(&curve).unwrap();
    let sixpi = matches!(check_sixpi_bound(&curve).unwrap(), SixPiVerdict::Applies { .. });
    let r = 40.0;
    let ns = [4usize, 6, 8, 10, 12];
    let ys: Vec<f64> = ns
        .iter()
        .map(|&n| axisym_functionals(&make_hump_stack_curve(n, r, 0.05).unwrap()).unwrap().int_h / (2.0 * PI))
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (_, slope) = linear_fit(&xs, &ys).unwrap();
    let e = rel(slope, -r * PI);
    let curves = random_window_curves(2024, 1000, 400);
    let violations = curves
        .iter()
        .filter(|c| !matches!(check_theta_window_theorem(c), Ok(WindowVerdict::Holds { satisfied: true, .. })))
        .count();
    verdict(
        rep.int_h < 0.0 && rep.w >= 6.0 * PI && sixpi && e <= 0.1 && curves.len() == 1000 && violations == 0,
        format!(
            "∫H {:.4}, W {:.4} (6π {:.4}); hump slope {slope:.3} vs {:.3} ({e:.2e}); {} curves, {violations} violations",
            rep.int_h,
            rep.w,
            6.0 * PI,
            -r * PI,
            curves.len()
        ),
    )
}

fn biharmonic() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut residual, mut mismatch) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let gamma = rng.gen_range(0.1..0.8);
        let mut draw = || std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let bc = AnnulusBoundaryData { radial: draw(), cos2: draw(), sin2: draw() };
        let sol = biharmonic_annulus(gamma, &bc).unwrap();
        mismatch = mismatch.max(sol.boundary_mismatch(&bc));
        for i in 0..=16 {
            let r = gamma + (1.0 - gamma) * i as f64 / 16.0;
            for j in 0..16 {
                residual = residual.max(sol.bilaplacian(r, 2.0 * PI * j as f64 / 16.0).abs());
            }
        }
    }
    let phi = inverse_error([0.2, 0.1, -0.3]);
    let psi = cubic_error([0.3, -0.2, 0.1, 0.4], 0.5);
    let p = Matrix2::new(2.0, 0.0, 0.0, 0.0);
    let q = Matrix2::new(1.5, 0.0, 0.0, -0.5);
    let run = |alpha: f64, gamma: f64| {
        let params = ConnectedSumParams::new(p, q, alpha, 4.0, gamma);
        let (graph, rep) = glued_graph_region(params, &phi, &psi).unwrap();
        (rep.strip_outer.abs(), (graph.solution.radial[1] - 2.0 * params.beta() * params.e).abs())
    };
    let alphas = [1e-3, 1e-4, 1e-5, 1e-6];
    let (strips, products): (Vec<f64>, Vec<f64>) = alphas.iter().map(|&a| run(a, 0.3)).unzip();
    let strip_exp = power_law_exponent(&alphas, &strips).unwrap();
    let alpha_exp = power_law_exponent(&alphas, &products).unwrap();
    let gammas = [0.04, 0.02, 0.01];
    let by_gamma: Vec<f64> = gammas.iter().map(|&g| run(1e-7, g).1).collect();
    let gamma_exp = power_law_exponent(&gammas, &by_gamma).unwrap();
    verdict(
        residual <= 1e-8
            && mismatch <= 1e-10
            && (strip_exp - 1.5).abs() <= 0.3
            && (alpha_exp - 1.0).abs() <= 0.3
            && (gamma_exp - 2.0).abs() <= 0.3,
        format!(
            "Δ²w residual {residual:.2e}, boundary {mismatch:.2e}; strip exponent {strip_exp:.3}; γ²α exponents α {alpha_exp:.3}, γ {gamma_exp:.3}"
        ),
    )
}

fn gradient_checks() -> Verdict {
    let mesh = egg_torus(512);
    let curv = compute_curvatures(&mesh).unwrap();
    let rep = report(&mesh, &curv).unwrap();
    let (gt, gw) = (gradient_t(&curv, &rep), gradient_w(&curv));
    let mut worst = [0.0f64; 2];
    for seed in 0..4 {
        let xi = smooth_field(&mesh, seed);
        for (k, g) in [&gt, &gw].into_iter().enumerate() {
            let predicted = curv.inner(g, &xi);
            let best = [3e-3, 1e-3, 1e-4, 1e-5]
                .iter()
                .map(|&h| {
                    let f = |s: f64| {
                        let r = evaluate(&displace_normal(&mesh, &curv.normals, &xi, s)).unwrap();
                        if k == 0 { r.t } else { r.w }
                    };
                    rel((f(h) - f(-h)) / (2.0 * h), predicted)
                })
                .fold(f64::INFINITY, f64::min);
            worst[k] = worst[k].max(best);
        }
    }
    let sphere = build_icosphere(5, 1.0).unwrap();
    let sc = compute_curvatures(&sphere).unwrap();
    let sgt = gradient_t(&sc, &report(&sphere, &sc).unwrap());
    let peak = sgt.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    verdict(
        mesh.vertex_count() >= 500 && worst[0] <= 1e-3 && worst[1] <= 1e-3 && peak <= 0.05,
        format!(
            "egg torus {} vertices: ∇T rel {:.2e}, ∇W rel {:.2e}; icosphere max |∇T| {peak:.2e}",
            mesh.vertex_count(),
            worst[0],
            worst[1]
        ),
    )
}

fn constrained_flow() -> Verdict {
    let target = sphere_t() * 1.02;
    let config = FlowConfig { target_r: target, ..FlowConfig::default() };
    let start = perturbed_sphere(3, 0.03, 7).unwrap();
    let (outcome, status): (FlowOutcome, String) = match run_flow(&start, &config) {
        Ok(o) => (o, "converged".into()),
        Err(e) => match e.partial() {
            Some(p) => (p.clone(), e.to_string()),
            None => return verdict(false, format!("flow failed without trace: {e}")),
        },
    };
    let last = *outcome.trace.last().unwrap();
    let floor_ok = outcome.trace.records.iter().all(|r| r.w >= r.t * r.t / 4.0 - 1e-8);
    let gap = (last.t - target).abs();
    let beta0 = estimate_beta0(&[7.2, 7.6, 8.0, 8.5], 3, 3, &FlowConfig::default());
    let best: Vec<f64> = beta0.rows.iter().map(|r| r.best_w).collect();
    verdict(
        gap <= 1e-3 && last.residual <= 1e-2 && floor_ok && last.w < 8.0 * PI && beta0.monotone,
        format!(
            "{status}; |T − R| {gap:.2e}, residual {:.3e}, W {:.5}, W ≥ T²/4 on all {} records: {floor_ok}; β₀ grid {best:.4?} monotone {}",
            last.residual,
            last.w,
            outcome.trace.records.len(),
            beta0.monotone
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict, u64); 10] = [
        ("sphere baselines", sphere_baselines, 5),
        ("Clifford torus", clifford, 10),
        ("conformal invariance", conformal_invariance, 30),
        ("blow-down / blow-up", blow_down_blow_up, 120),
        ("catenoid bridge", catenoid_bridge, 120),
        ("isoperimetric ratios", isoperimetric_remark, 120),
        ("axisymmetric suite", axisymmetric, 60),
        ("biharmonic annulus", biharmonic, 30),
        ("gradient checks", gradient_checks, 60),
        ("constrained flow", constrained_flow, 600),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= Duration::from_secs(*limit);
        println!(
            "{} criterion {:>2} {name}: {} [{:.1} s of {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

//! Projected-gradient minimization of the Willmore energy at fixed total mean
//! curvature ratio, with Newton restoration of the constraint.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{compute_curvatures, DiscreteCurvatures};
use crate::functionals::{self, fmt_sig, FunctionalError, FunctionalReport};
use crate::mesh::{build_icosphere, MeshError, TriangleMesh};
use crate::Vec3;

/// Area to which meshes are rescaled, and at which residuals are reported.
pub const REFERENCE_AREA: f64 = 1.0;
const ARMIJO: f64 = 1e-4;
const LINE_SEARCH_SLACK: f64 = 1e-12;
const MIN_ANGLE_DEG: f64 = 1.0;
const DEGENERATE_GT: f64 = 1e-14;
const CG_MAX_ITERS: usize = 500;

#[derive(Debug, thiserror::Error)]
pub enum OptimizerError {
    #[error("constraint gradient vanishes (‖∇T‖² = {0:e}); the surface is a round sphere")]
    SphereDegenerate(f64),
    #[error("line search failed {rejections} times in a row at iteration {iteration}")]
    Stagnation { iteration: usize, rejections: usize, partial: Box<FlowOutcome> },
    #[error("mesh quality collapsed: minimum angle {min_angle_deg:.3}° at iteration {iteration}")]
    Quality { iteration: usize, min_angle_deg: f64, partial: Box<FlowOutcome> },
    #[error("no convergence within {iterations} iterations")]
    MaxIterations { iterations: usize, partial: Box<FlowOutcome> },
    #[error("constraint restoration failed: |T − R| = {0:e}")]
    Restoration(f64),
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

impl OptimizerError {
    /// Mesh and trace reached before a non-convergence failure.
    pub fn partial(&self) -> Option<&FlowOutcome> {
        match self {
            Self::Stagnation { partial, .. } | Self::Quality { partial, .. } | Self::MaxIterations { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub target_r: f64,
    /// Initial step as a fraction of the mean edge length moved by the fastest vertex.
    pub step: f64,
    pub max_iters: usize,
    pub constraint_tolerance: f64,
    pub residual_tolerance: f64,
    pub tangential_smoothing_weight: f64,
    /// Accepted steps between tangential smoothing passes; 0 disables smoothing.
    pub smoothing_every: usize,
    pub area_renormalize: bool,
    pub max_rejections: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            target_r: 4.0 * PI.sqrt(),
            step: 0.1,
            max_iters: 4000,
            constraint_tolerance: 1e-3,
            residual_tolerance: 1e-2,
            tangential_smoothing_weight: 0.5,
            smoothing_every: 5,
            area_renormalize: true,
            max_rejections: 30,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !self.target_r.is_finite() {
            return Err(OptimizerError::Config("target_r must be finite".into()));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(OptimizerError::Config(format!("step must be positive, got {}", self.step)));
        }
        if !(self.constraint_tolerance > 0.0 && self.residual_tolerance > 0.0) {
            return Err(OptimizerError::Config("tolerances must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.tangential_smoothing_weight) {
            return Err(OptimizerError::Config("tangential smoothing weight must lie in [0, 1]".into()));
        }
        if self.max_rejections == 0 {
            return Err(OptimizerError::Config("max_rejections must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub iter: usize,
    pub w: f64,
    pub t: f64,
    pub a: f64,
    pub lambda: f64,
    pub residual: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
}

impl FlowTrace {
    pub const CSV_HEADER: &'static str = "iter,W,T,A,lambda,residual,accepted";

    pub fn to_csv(&self, comment: &str) -> String {
        let mut s = String::new();
        for line in comment.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.iter,
                fmt_sig(r.w),
                fmt_sig(r.t),
                fmt_sig(r.a),
                fmt_sig(r.lambda),
                fmt_sig(r.residual),
                u8::from(r.accepted)
            ));
        }
        s
    }

    pub fn last(&self) -> Option<&FlowRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub mesh: TriangleMesh,
    pub trace: FlowTrace,
}

/// `λ = ⟨g_W, g_T⟩/⟨g_T, g_T⟩` and `−(g_W − λ g_T)` in the `weights` inner product.
pub fn project_direction(gw: &[f64], gt: &[f64], weights: &[f64]) -> Result<(Vec<f64>, f64), OptimizerError> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(weights).map(|((x, y), w)| x * y * w).sum::<f64>();
    let tt = dot(gt, gt);
    let scale = dot(gw, gw).max(1.0);
    if !(tt > DEGENERATE_GT * scale) {
        return Err(OptimizerError::SphereDegenerate(tt));
    }
    let lambda = dot(gw, gt) / tt;
    let mut dir: Vec<f64> = gw.iter().zip(gt).map(|(w, t)| -(w - lambda * t)).collect();
    let drift = dot(&dir, gt) / tt;
    for (d, t) in dir.iter_mut().zip(gt) {
        *d -= drift * t;
    }
    Ok((dir, lambda))
}

struct State {
    mesh: TriangleMesh,
    curv: DiscreteCurvatures,
    rep: FunctionalReport,
}

impl State {
    fn new(mesh: TriangleMesh) -> Result<Self, OptimizerError> {
        let curv = compute_curvatures(&mesh)?;
        let rep = functionals::report(&mesh, &curv)?;
        Ok(Self { mesh, curv, rep })
    }
}

fn mean_edge(mesh: &TriangleMesh) -> f64 {
    let e = mesh.edges();
    e.iter().map(|&(a, b)| (mesh.vertices[a] - mesh.vertices[b]).norm()).sum::<f64>() / e.len().max(1) as f64
}

fn renormalize(mesh: &TriangleMesh, area: f64) -> TriangleMesh {
    let c = mesh.vertices.iter().sum::<Vec3>() / mesh.vertices.len() as f64;
    let s = (REFERENCE_AREA / area).sqrt();
    mesh.map_vertices(|p| c + (p - c) * s)
}

/// `(I − cΔ)⁻¹ g` by conjugate gradients in the area inner product.
fn sobolev_solve(curv: &DiscreteCurvatures, g: &[f64], c: f64) -> Vec<f64> {
    let apply = |x: &[f64]| -> Vec<f64> {
        let l = curv.laplacian(x);
        x.iter().zip(&l).map(|(x, l)| x - c * l).collect()
    };
    let mut x = vec![0.0; g.len()];
    let mut r = g.to_vec();
    let mut p = r.clone();
    let mut rr = curv.inner(&r, &r);
    let stop = 1e-20 * rr.max(f64::MIN_POSITIVE);
    for _ in 0..CG_MAX_ITERS {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let pap = curv.inner(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let a = rr / pap;
        for i in 0..x.len() {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr_new = curv.inner(&r, &r);
        let b = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + b * p[i];
        }
    }
    x
}

/// `(I − cΔ)⁻² g` with `c` the area relative to the unit sphere.
fn precondition(st: &State, g: &[f64]) -> Vec<f64> {
    let c = st.rep.a / (4.0 * PI);
    let once = sobolev_solve(&st.curv, g, c);
    sobolev_solve(&st.curv, &once, c)
}

/// `−(Sg_W − μ Sg_T)` with `S` the preconditioner and `μ` chosen so that the
/// result is L²-orthogonal to `g_T`.
fn smoothed_direction(st: &State, gw: &[f64], gt: &[f64]) -> Vec<f64> {
    let (pgw, pgt) = (precondition(st, gw), precondition(st, gt));
    let mu = st.curv.inner(gt, &pgw) / st.curv.inner(gt, &pgt);
    pgw.iter().zip(&pgt).map(|(w, t)| -(w - mu * t)).collect()
}

/// Normal velocity used by [`run_flow`] and the L² multiplier `λ` at `mesh`.
pub fn descent_direction(mesh: &TriangleMesh) -> Result<(Vec<f64>, f64), OptimizerError> {
    let st = State::new(mesh.clone())?;
    let gw = functionals::gradient_w(&st.curv);
    let gt = functionals::gradient_t(&st.curv, &st.rep);
    let (_, lambda) = project_direction(&gw, &gt, &st.curv.area)?;
    Ok((smoothed_direction(&st, &gw, &gt), lambda))
}

/// Newton steps along the preconditioned `∇T` until `|T − R| ≤ tol`; each
/// step moves the fastest vertex by at most `max_move`.
fn restore(mut st: State, target: f64, tol: f64, max_move: f64, max_steps: usize) -> Result<State, OptimizerError> {
    for _ in 0..max_steps {
        let gap = target - st.rep.t;
        if gap.abs() <= tol {
            return Ok(st);
        }
        let gt = functionals::gradient_t(&st.curv, &st.rep);
        let pgt = precondition(&st, &gt);
        let tt = st.curv.inner(&gt, &pgt);
        if !(tt > 0.0) {
            return Err(OptimizerError::SphereDegenerate(tt));
        }
        let peak = pgt.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let mut s = gap / tt;
        if s.abs() * peak > max_move {
            s = s.signum() * max_move / peak;
        }
        st = State::new(functionals::displace_normal(&st.mesh, &st.curv.normals, &pgt, s))?;
    }
    Err(OptimizerError::Restoration((target - st.rep.t).abs()))
}

/// Area-weighted umbrella smoothing projected onto the tangent planes.
fn tangential_smoothing(st: &State, weight: f64) -> TriangleMesh {
    let nbrs = st.mesh.vertex_neighbors();
    let mut out = st.mesh.clone();
    for (i, ns) in nbrs.iter().enumerate() {
        if ns.is_empty() {
            continue;
        }
        let p = st.mesh.vertices[i];
        let avg = ns.iter().map(|&j| st.mesh.vertices[j]).sum::<Vec3>() / ns.len() as f64;
        let d = avg - p;
        let n = st.curv.normals[i];
        out.vertices[i] = p + (d - n * d.dot(&n)) * weight;
    }
    out
}

fn record(iter: usize, st: &State, lambda: f64, residual: f64, accepted: bool) -> FlowRecord {
    FlowRecord { iter, w: st.rep.w, t: st.rep.t, a: st.rep.a, lambda, residual, accepted }
}

/// `‖g_W − λ g_T‖_{L²}` rescaled to the reference area.
fn residual_of(st: &State, gw: &[f64], gt: &[f64], lambda: f64) -> f64 {
    let r: Vec<f64> = gw.iter().zip(gt).map(|(w, t)| w - lambda * t).collect();
    st.curv.inner(&r, &r).sqrt() * st.rep.a / REFERENCE_AREA
}

/// Runs the constrained flow until `|T − R|` and the Euler–Lagrange residual
/// are both below tolerance.
pub fn run_flow(mesh: &TriangleMesh, config: &FlowConfig) -> Result<FlowOutcome, OptimizerError> {
    config.validate()?;
    let mut mesh = mesh.clone();
    if config.area_renormalize {
        mesh = renormalize(&mesh, functionals::area(&mesh));
    }
    let tol = 0.1 * config.constraint_tolerance;
    let h = mean_edge(&mesh);
    let mut st = restore(State::new(mesh)?, config.target_r, tol, 0.2 * h, 500)?;
    if config.area_renormalize {
        st = State::new(renormalize(&st.mesh, st.rep.a))?;
    }
    let mut trace = FlowTrace::default();
    let mut tau = f64::NAN;
    let mut accepted_steps = 0usize;
    let mut last_accepted = true;
    let fail = |st: &State, trace: &FlowTrace| Box::new(FlowOutcome { mesh: st.mesh.clone(), trace: trace.clone() });

    for iter in 0..config.max_iters {
        let gw = functionals::gradient_w(&st.curv);
        let gt = functionals::gradient_t(&st.curv, &st.rep);
        let (_, lambda) = project_direction(&gw, &gt, &st.curv.area)?;
        let dir = smoothed_direction(&st, &gw, &gt);
        let residual = residual_of(&st, &gw, &gt, lambda);
        trace.records.push(record(iter, &st, lambda, residual, last_accepted));
        if (st.rep.t - config.target_r).abs() <= config.constraint_tolerance && residual <= config.residual_tolerance {
            return Ok(FlowOutcome { mesh: st.mesh, trace });
        }
        let min_angle = st.mesh.min_angle().to_degrees();
        if min_angle < MIN_ANGLE_DEG {
            return Err(OptimizerError::Quality { iteration: iter, min_angle_deg: min_angle, partial: fail(&st, &trace) });
        }

        let h = mean_edge(&st.mesh);
        let peak = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if !(peak > 0.0) {
            return Ok(FlowOutcome { mesh: st.mesh, trace });
        }
        if !tau.is_finite() {
            tau = config.step * h / peak;
        }
        tau = tau.min(0.25 * h / peak);
        let slope = -st.curv.inner(&gw, &dir);
        let mut rejections = 0;
        let next = loop {
            let trial = functionals::displace_normal(&st.mesh, &st.curv.normals, &dir, tau);
            let candidate = State::new(trial).and_then(|s| restore(s, config.target_r, tol, 0.2 * h, 20));
            if let Ok(c) = candidate {
                if c.rep.w < st.rep.w - ARMIJO * tau * slope {
                    break c;
                }
            }
            tau *= 0.5;
            rejections += 1;
            if rejections >= config.max_rejections {
                return Err(OptimizerError::Stagnation { iteration: iter, rejections, partial: fail(&st, &trace) });
            }
        };
        last_accepted = true;
        tau *= if rejections == 0 { 1.5 } else { 1.0 };
        st = next;
        accepted_steps += 1;

        if config.smoothing_every > 0 && accepted_steps % config.smoothing_every == 0 && config.tangential_smoothing_weight > 0.0 {
            let smoothed = State::new(tangential_smoothing(&st, config.tangential_smoothing_weight))
                .and_then(|s| restore(s, config.target_r, tol, 0.2 * h, 20));
            if let Ok(s) = smoothed {
                if s.rep.w <= st.rep.w + LINE_SEARCH_SLACK {
                    st = s;
                }
            }
        }
        if config.area_renormalize && (st.rep.a / REFERENCE_AREA - 1.0).abs() > 1e-9 {
            st = State::new(renormalize(&st.mesh, st.rep.a))?;
        }
    }
    Err(OptimizerError::MaxIterations { iterations: config.max_iters, partial: fail(&st, &trace) })
}

/// Icosphere scaled radially by `1 + noise·f/max|f|`, with `f` a random sum of
/// powers of `u·p` of degrees 2 to 4 in random directions `u`.
pub fn perturbed_sphere(subdivisions: usize, noise: f64, seed: u64) -> Result<TriangleMesh, MeshError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = build_icosphere(subdivisions, 1.0)?;
    let terms: Vec<(Vec3, f64, i32)> = (0..6)
        .map(|k| {
            let u = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let u = if u.norm() > 1e-3 { u.normalize() } else { Vec3::z() };
            (u, rng.gen_range(-1.0..1.0), 2 + k % 3)
        })
        .collect();
    let f = |p: &Vec3| terms.iter().map(|(u, a, d)| a * u.dot(p).powi(*d)).sum::<f64>();
    let peak = m.vertices.iter().map(|p| f(p).abs()).fold(0.0, f64::max);
    if noise == 0.0 || peak == 0.0 {
        return Ok(m);
    }
    Ok(m.map_vertices(|p| p * (1.0 + noise * f(&p) / peak)))
}

/// Seed surface whose ratio is close to `r`: a prolate spheroid above `T(S²)`,
/// a sphere with two polar dimples below it.
pub fn seed_surface(r: f64, subdivisions: usize, noise: f64, seed: u64) -> Result<TriangleMesh, OptimizerError> {
    let base = perturbed_sphere(subdivisions, noise, seed)?;
    let sphere_t = 4.0 * PI.sqrt();
    let shape = |s: f64| -> TriangleMesh {
        if r >= sphere_t {
            let a = 1.0 + s;
            base.map_vertices(|p| Vec3::new(p.x / a.sqrt(), p.y / a.sqrt(), p.z * a))
        } else {
            base.map_vertices(|p| {
                let rho2 = p.x * p.x + p.y * p.y;
                p - Vec3::new(0.0, 0.0, p.z.signum() * s * 0.9 * (-rho2 / 0.18).exp())
            })
        }
    };
    let t_of = |s: f64| functionals::evaluate(&shape(s)).map(|rep| rep.t);
    let (mut lo, mut hi) = (0.0, if r >= sphere_t { 8.0 } else { 1.0 });
    let (flo, fhi) = (t_of(lo)? - r, t_of(hi)? - r);
    if flo * fhi > 0.0 {
        return Ok(shape(if flo.abs() < fhi.abs() { lo } else { hi }));
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if (t_of(mid)? - r) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(shape(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Beta0Row {
    pub r: f64,
    /// Lowest W over seeds among final states satisfying the constraint.
    pub best_w: f64,
    pub lambda: f64,
    /// Seeds that also met the residual tolerance.
    pub converged_seeds: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Beta0Table {
    pub rows: Vec<Beta0Row>,
    /// Best values above `T(S²)` are non-decreasing within a 2% band.
    pub monotone: bool,
    /// Every finite best value lies below 8π.
    pub below_8pi: bool,
}

impl Beta0Table {
    pub const CSV_HEADER: &'static str = "R,best_W,lambda,converged_seeds,error_flag";

    pub fn to_csv(&self, comment: &str) -> String {
        let mut s = String::new();
        for line in comment.lines() {
            s.push_str(&format!("# {line}\n"));
        }
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_sig(r.r),
                fmt_sig(r.best_w),
                fmt_sig(r.lambda),
                r.converged_seeds,
                u8::from(r.error.is_some())
            ));
        }
        s
    }
}

/// Best-of-seeds constrained minimum for each ratio in `r_grid`, flows run in parallel.
pub fn estimate_beta0(r_grid: &[f64], seeds: usize, subdivisions: usize, config: &FlowConfig) -> Beta0Table {
    let jobs: Vec<(usize, u64)> = (0..r_grid.len()).flat_map(|i| (0..seeds.max(1) as u64).map(move |s| (i, s))).collect();
    let results: Vec<(usize, Result<(FlowRecord, bool), String>)> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let r = r_grid[i];
            let cfg = FlowConfig { target_r: r, ..*config };
            let noise = if s == 0 { 0.0 } else { 0.01 };
            let out = match seed_surface(r, subdivisions, noise, s).and_then(|m| run_flow(&m, &cfg)) {
                Ok(o) => o.trace.last().map(|rec| (*rec, true)).ok_or_else(|| "empty trace".to_string()),
                Err(e) => match e.partial().and_then(|p| p.trace.last()) {
                    Some(rec) if (rec.t - r).abs() <= cfg.constraint_tolerance => Ok((*rec, false)),
                    _ => Err(e.to_string()),
                },
            };
            (i, out)
        })
        .collect();
    let mut rows: Vec<Beta0Row> = r_grid
        .iter()
        .map(|&r| Beta0Row { r, best_w: f64::NAN, lambda: f64::NAN, converged_seeds: 0, error: None })
        .collect();
    for (i, res) in results {
        let row = &mut rows[i];
        match res {
            Ok((rec, converged)) => {
                row.converged_seeds += usize::from(converged);
                if !(row.best_w <= rec.w) {
                    row.best_w = rec.w;
                    row.lambda = rec.lambda;
                }
            }
            Err(e) => {
                if row.error.is_none() {
                    row.error = Some(e);
                }
            }
        }
    }
    for row in rows.iter_mut() {
        if row.best_w.is_finite() {
            row.error = None;
        }
    }
    let sphere_t = 4.0 * PI.sqrt();
    let mut above: Vec<&Beta0Row> = rows.iter().filter(|r| r.r > sphere_t && r.best_w.is_finite()).collect();
    above.sort_by(|a, b| a.r.total_cmp(&b.r));
    let monotone = above.windows(2).all(|w| w[1].best_w >= w[0].best_w * 0.98);
    let below_8pi = rows.iter().filter(|r| r.best_w.is_finite()).all(|r| r.best_w < 8.0 * PI);
    Beta0Table { rows, monotone, below_8pi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_gradients_give_zero_direction() {
        let g = vec![1.0, -2.0, 0.5];
        let (d, l) = project_direction(&g, &g, &[1.0, 2.0, 3.0]).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        assert!(d.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn orthogonal_gradients_give_zero_multiplier() {
        let (d, l) = project_direction(&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(d, vec![-1.0, 0.0]);
    }

    #[test]
    fn vanishing_constraint_gradient_is_rejected() {
        assert!(matches!(project_direction(&[1.0], &[0.0], &[1.0]), Err(OptimizerError::SphereDegenerate(_))));
    }

    #[test]
    fn non_positive_step_is_rejected() {
        let c = FlowConfig { step: 0.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(OptimizerError::Config(_))));
    }

    #[test]
    fn trace_csv_has_header_and_comment() {
        let t = FlowTrace { records: vec![FlowRecord { iter: 0, w: 1.0, t: 2.0, a: 3.0, lambda: 0.5, residual: 0.1, accepted: true }] };
        let csv = t.to_csv("run");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# run");
        assert_eq!(lines[1], FlowTrace::CSV_HEADER);
        assert!(lines[2].ends_with(",1"));
    }
}

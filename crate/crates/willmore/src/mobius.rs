//! Sphere inversion, the stereographic involution and limit experiments
//! for the total mean curvature ratio under inversions.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::compute_curvatures;
use crate::fit::power_law_exponent;
use crate::functionals::{self, fmt_sig, FunctionalError};
use crate::mesh::{distance_to_mesh, winding_number, MeshError, TriangleMesh};
use crate::refine::{refine_towards, MidpointRule};
use crate::Vec3;

/// Hard clearance between an inversion center and the surface, relative to the bounding-box diagonal.
pub const CENTER_CLEARANCE_REL: f64 = 1e-9;
/// Sweep clearance relative to the local edge length.
pub const SWEEP_CLEARANCE_REL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum MobiusError {
    #[error("inversion center on surface: clearance {clearance:e} below {tolerance:e}")]
    CenterOnSurface { clearance: f64, tolerance: f64 },
    #[error("pole e3 lies on the surface")]
    Pole,
    #[error("target T = {target} outside the open interval between {t_mesh} and {t_sphere}")]
    UnreachableTarget { target: f64, t_mesh: f64, t_sphere: f64 },
    #[error("ray blocked: {0}")]
    RayBlocked(String),
    #[error("no sign change of T − target found along the ray")]
    NoBracket,
    #[error("bisection stopped after {0} iterations")]
    NoConvergence(usize),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// `T(S²)`, the value of the ratio on any round sphere.
pub fn sphere_t() -> f64 {
    4.0 * std::f64::consts::PI.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionCenter {
    pub a: Vec3,
    /// Distance from `a` to the mesh it was found for.
    pub clearance: f64,
    /// Ray parameter with `a = p − t·n(p)`.
    pub ray_t: f64,
    pub vertex: usize,
    pub achieved_t: f64,
    pub iterations: usize,
    /// Whether the pre-scan saw `T` vary monotonically in `t`.
    pub monotone_prescan: bool,
}

pub fn invert_point(p: Vec3, a: Vec3) -> Vec3 {
    let d = p - a;
    d / d.norm_squared()
}

/// Maps vertices and keeps faces inward oriented: the winding is reversed exactly
/// when `a` lies outside the enclosed region.
fn map_with_orientation(mesh: &TriangleMesh, a: Vec3, f: impl Fn(Vec3) -> Vec3) -> TriangleMesh {
    let inside = winding_number(mesh, a).abs() > 0.5;
    let mapped = mesh.map_vertices(f);
    if inside {
        mapped
    } else {
        mapped.flipped()
    }
}

fn check_clearance(mesh: &TriangleMesh, a: Vec3) -> Result<f64, MobiusError> {
    let clearance = distance_to_mesh(mesh, a);
    let tolerance = CENTER_CLEARANCE_REL * mesh.bbox_diagonal();
    if !(clearance > tolerance) {
        return Err(MobiusError::CenterOnSurface { clearance, tolerance });
    }
    Ok(clearance)
}

/// `I_a(x) = (x − a)/|x − a|²` applied to every vertex.
pub fn sphere_inversion(mesh: &TriangleMesh, a: Vec3) -> Result<TriangleMesh, MobiusError> {
    check_clearance(mesh, a)?;
    Ok(map_with_orientation(mesh, a, |p| invert_point(p, a)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    pub w_before: f64,
    pub w_after: f64,
    pub rel_gap: f64,
}

pub fn willmore_invariance_check(mesh: &TriangleMesh, a: Vec3) -> Result<InvarianceCheck, MobiusError> {
    let image = sphere_inversion(mesh, a)?;
    let w_before = functionals::willmore_energy(&compute_curvatures(mesh)?);
    let w_after = functionals::willmore_energy(&compute_curvatures(&image)?);
    Ok(InvarianceCheck { w_before, w_after, rel_gap: (w_after - w_before).abs() / w_before })
}

fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// `T(p) = e₃ + 2(p − e₃)/|p − e₃|²`.
pub fn stereographic_t(p: Vec3) -> Result<Vec3, MobiusError> {
    let d = p - e3();
    let r2 = d.norm_squared();
    if !(r2 > 0.0) {
        return Err(MobiusError::Pole);
    }
    Ok(e3() + d * (2.0 / r2))
}

pub fn apply_stereographic_t(mesh: &TriangleMesh) -> Result<TriangleMesh, MobiusError> {
    check_clearance(mesh, e3()).map_err(|_| MobiusError::Pole)?;
    Ok(map_with_orientation(mesh, e3(), |p| {
        let d = p - e3();
        e3() + d * (2.0 / d.norm_squared())
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub params: Vec<f64>,
    pub t_values: Vec<f64>,
    pub w_values: Vec<f64>,
    pub errors: Vec<Option<String>>,
    /// `T` of the untransformed mesh.
    pub reference_t: f64,
    pub fitted_exponent: Option<f64>,
}

impl SweepSeries {
    pub const CSV_HEADER: &'static str = "param,T,W,error_flag";

    pub fn to_csv(&self, comment: &str) -> String {
        let mut out = format!("# {comment}\n{}\n", Self::CSV_HEADER);
        for i in 0..self.params.len() {
            let flag = if self.errors[i].is_some() { 1 } else { 0 };
            out.push_str(&format!(
                "{},{},{},{flag}\n",
                fmt_sig(self.params[i]),
                fmt_sig(self.t_values[i]),
                fmt_sig(self.w_values[i])
            ));
        }
        out
    }

    /// The last row without an error flag.
    pub fn last_valid(&self) -> Option<(f64, f64, f64)> {
        (0..self.params.len())
            .rev()
            .find(|&i| self.errors[i].is_none())
            .map(|i| (self.params[i], self.t_values[i], self.w_values[i]))
    }
}

fn t_and_w(mesh: &TriangleMesh) -> Result<(f64, f64), MobiusError> {
    let rep = functionals::evaluate(mesh)?;
    Ok((rep.t, rep.w))
}

fn check_monotone(values: &[f64], increasing: bool) -> Result<(), MobiusError> {
    let ok = values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if !ok {
        let dir = if increasing { "increasing" } else { "decreasing" };
        return Err(MobiusError::InvalidSweep(format!("parameters must be strictly {dir}")));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(MobiusError::InvalidSweep("parameters must be positive and finite".into()));
    }
    Ok(())
}

/// `T(I_a ∘ f)` for `a = radius·direction`, with the decay exponent of
/// `|T(I_a ∘ f) − T(f)|` against `1/|a|`.
pub fn blow_down_sweep(mesh: &TriangleMesh, direction: Vec3, radii: &[f64]) -> Result<SweepSeries, MobiusError> {
    check_monotone(radii, true)?;
    let dir = direction
        .try_normalize(1e-300)
        .ok_or_else(|| MobiusError::InvalidSweep("zero direction".into()))?;
    let (t_ref, _) = t_and_w(mesh)?;
    let tol = CENTER_CLEARANCE_REL * mesh.bbox_diagonal();
    let rows: Vec<Result<(f64, f64), String>> = radii
        .par_iter()
        .map(|&r| {
            let a = dir * r;
            if distance_to_mesh(mesh, a) <= tol || winding_number(mesh, a).abs() > 0.5 {
                return Err(format!("center at radius {r} is not outside the surface"));
            }
            sphere_inversion(mesh, a).map_err(|e| e.to_string()).and_then(|m| t_and_w(&m).map_err(|e| e.to_string()))
        })
        .collect();
    Ok(assemble(radii, rows, t_ref, |r, t| (1.0 / r, (t - t_ref).abs())))
}

fn assemble(
    params: &[f64],
    rows: Vec<Result<(f64, f64), String>>,
    reference_t: f64,
    fit_point: impl Fn(f64, f64) -> (f64, f64),
) -> SweepSeries {
    let mut s = SweepSeries {
        params: params.to_vec(),
        t_values: Vec::new(),
        w_values: Vec::new(),
        errors: Vec::new(),
        reference_t,
        fitted_exponent: None,
    };
    let (mut fx, mut fy) = (Vec::new(), Vec::new());
    for (p, row) in params.iter().zip(rows) {
        match row {
            Ok((t, w)) => {
                s.t_values.push(t);
                s.w_values.push(w);
                s.errors.push(None);
                let (x, y) = fit_point(*p, t);
                if y > 0.0 {
                    fx.push(x);
                    fy.push(y);
                }
            }
            Err(e) => {
                s.t_values.push(f64::NAN);
                s.w_values.push(f64::NAN);
                s.errors.push(Some(e));
            }
        }
    }
    if fx.len() >= 2 {
        s.fitted_exponent = power_law_exponent(&fx, &fy);
    }
    s
}

/// Midpoint placement for the refinement around a blow-up foot point.
#[derive(Clone, Default)]
pub enum FootRefinement {
    /// Cubic Hermite midpoints from the discrete vertex normals.
    #[default]
    Hermite,
    /// Projection onto a known smooth surface.
    Project(Arc<dyn Fn(Vec3) -> Vec3 + Send + Sync>),
}

#[derive(Clone)]
pub struct BlowUpConfig {
    /// Edges near the foot point are kept below `grading × distance`.
    pub grading: f64,
    /// Edges are never refined below `grading × floor_factor × t`.
    pub floor_factor: f64,
    pub max_faces: usize,
    pub refinement: FootRefinement,
}

impl Default for BlowUpConfig {
    fn default() -> Self {
        Self { grading: 0.15, floor_factor: 1.0, max_faces: 2_000_000, refinement: FootRefinement::Hermite }
    }
}

/// Refines `mesh` around `foot` for an inversion center at distance `t`.
pub fn refine_for_center(
    mesh: &TriangleMesh,
    normals: &[Vec3],
    foot: Vec3,
    t: f64,
    config: &BlowUpConfig,
) -> TriangleMesh {
    let h_min = config.grading * config.floor_factor * t;
    match &config.refinement {
        FootRefinement::Hermite => {
            refine_towards(mesh, normals, MidpointRule::Hermite, foot, config.grading, h_min, config.max_faces)
        }
        FootRefinement::Project(p) => {
            let f = |x: Vec3| p(x);
            refine_towards(mesh, normals, MidpointRule::Project(&f), foot, config.grading, h_min, config.max_faces)
        }
    }
}

fn local_edge(mesh: &TriangleMesh, v: usize) -> f64 {
    let mut l = f64::INFINITY;
    for f in &mesh.faces {
        if f.contains(&v) {
            for k in 0..3 {
                l = l.min((mesh.vertices[f[k]] - mesh.vertices[f[(k + 1) % 3]]).norm());
            }
        }
    }
    l
}

/// `T(I_{γ(t)} ∘ f)` with `γ(t) = p − t·n(p)` at a mesh vertex `p`.
pub fn blow_up_sweep(
    mesh: &TriangleMesh,
    vertex: usize,
    t_values: &[f64],
    config: &BlowUpConfig,
) -> Result<SweepSeries, MobiusError> {
    if vertex >= mesh.vertices.len() {
        return Err(MobiusError::InvalidSweep(format!("vertex {vertex} out of range")));
    }
    check_monotone(t_values, false)?;
    let curv = compute_curvatures(mesh)?;
    let t_ref = functionals::report(mesh, &curv)?.t;
    let p = mesh.vertices[vertex];
    let n = curv.normals[vertex];
    let edge = local_edge(mesh, vertex);
    let rows: Vec<Result<(f64, f64), String>> = t_values
        .par_iter()
        .map(|&t| {
            let a = p - n * t;
            let refined = refine_for_center(mesh, &curv.normals, p, t, config);
            let clearance = distance_to_mesh(&refined, a);
            if clearance <= SWEEP_CLEARANCE_REL * edge {
                return Err(format!("clearance {clearance:e} too small at t = {t}"));
            }
            let image = map_with_orientation(&refined, a, |x| invert_point(x, a));
            t_and_w(&image).map_err(|e| e.to_string())
        })
        .collect();
    let t_s = sphere_t();
    Ok(assemble(t_values, rows, t_ref, |t, v| (t, (v - t_s).abs())))
}

fn ray_hits_triangle(o: Vec3, d: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let (e1, e2) = (b - a, c - a);
    let h = d.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-300 {
        return None;
    }
    let s = o - a;
    let u = s.dot(&h) / det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) / det;
    (t > 0.0).then_some(t)
}

/// Smallest ray parameter at which `p − t·n` meets a face not incident to `vertex`.
fn ray_block(mesh: &TriangleMesh, vertex: usize, n: Vec3) -> Option<f64> {
    let o = mesh.vertices[vertex];
    mesh.faces
        .iter()
        .filter(|f| !f.contains(&vertex))
        .filter_map(|&[i, j, k]| ray_hits_triangle(o, -n, mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]))
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |m| m.min(t))))
}

/// Vertex farthest from the vertex centroid; its outward ray is clear on star-shaped
/// and most toroidal surfaces.
pub fn default_ray_vertex(mesh: &TriangleMesh) -> usize {
    let c = mesh.vertices.iter().sum::<Vec3>() / mesh.vertices.len() as f64;
    (0..mesh.vertices.len())
        .max_by(|&i, &j| (mesh.vertices[i] - c).norm().total_cmp(&(mesh.vertices[j] - c).norm()))
        .unwrap_or(0)
}

#[derive(Clone)]
pub struct MatchConfig {
    pub vertex: Option<usize>,
    pub blow_up: BlowUpConfig,
    pub scan_points: usize,
    pub max_iterations: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { vertex: None, blow_up: BlowUpConfig::default(), scan_points: 32, max_iterations: 60 }
    }
}

/// Finds `a = p − t·n(p)` with `T(I_a ∘ f)` equal to `target` by bisection in `log t`.
pub fn match_t_by_inversion(
    mesh: &TriangleMesh,
    target: f64,
    config: &MatchConfig,
) -> Result<InversionCenter, MobiusError> {
    let curv = compute_curvatures(mesh)?;
    let t_mesh = functionals::report(mesh, &curv)?.t;
    let t_sphere = sphere_t();
    let (lo, hi) = (t_mesh.min(t_sphere), t_mesh.max(t_sphere));
    if !(target > lo && target < hi) {
        return Err(MobiusError::UnreachableTarget { target, t_mesh, t_sphere });
    }
    let vertex = config.vertex.unwrap_or_else(|| default_ray_vertex(mesh));
    if vertex >= mesh.vertices.len() {
        return Err(MobiusError::InvalidSweep(format!("vertex {vertex} out of range")));
    }
    let p = mesh.vertices[vertex];
    let n = curv.normals[vertex];
    if let Some(hit) = ray_block(mesh, vertex, n) {
        return Err(MobiusError::RayBlocked(format!("ray meets the surface at t = {hit:e}")));
    }
    let diag = mesh.bbox_diagonal();
    let (t_hi, t_lo) = (20.0 * diag, 1e-4 * diag);
    let m = config.scan_points.max(4);
    let grid: Vec<f64> = (0..m).map(|k| t_hi * (t_lo / t_hi).powf(k as f64 / (m - 1) as f64)).collect();
    let evaluate_on = |base: &TriangleMesh, t: f64| -> Result<f64, MobiusError> {
        let a = p - n * t;
        let image = map_with_orientation(base, a, |x| invert_point(x, a));
        Ok(functionals::evaluate(&image)?.t)
    };
    let scan: Vec<Result<f64, MobiusError>> = grid
        .par_iter()
        .map(|&t| evaluate_on(&refine_for_center(mesh, &curv.normals, p, t, &config.blow_up), t))
        .collect();
    let mut values = Vec::with_capacity(m);
    for v in scan {
        values.push(v?);
    }
    let sign0 = (t_mesh - target).signum();
    let k = values
        .iter()
        .position(|v| (v - target).signum() != sign0)
        .ok_or(MobiusError::NoBracket)?;
    if k == 0 {
        return Err(MobiusError::NoBracket);
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone_prescan = diffs.iter().all(|d| *d >= 0.0) || diffs.iter().all(|d| *d <= 0.0);

    let (mut a_t, mut b_t) = (grid[k - 1], grid[k]);
    let fixed = refine_for_center(mesh, &curv.normals, p, b_t, &config.blow_up);
    let fa = evaluate_on(&fixed, a_t)? - target;
    let fb = evaluate_on(&fixed, b_t)? - target;
    if fa.signum() == fb.signum() {
        return Err(MobiusError::NoBracket);
    }
    let tol = 1e-3 * (t_sphere - t_mesh).abs();
    for it in 1..=config.max_iterations {
        let mid = (a_t * b_t).sqrt();
        let fm = evaluate_on(&fixed, mid)? - target;
        if fm.abs() <= tol {
            let a = p - n * mid;
            return Ok(InversionCenter {
                a,
                clearance: distance_to_mesh(&fixed, a),
                ray_t: mid,
                vertex,
                achieved_t: fm + target,
                iterations: it,
                monotone_prescan,
            });
        }
        if fm.signum() == fa.signum() {
            a_t = mid;
        } else {
            b_t = mid;
        }
    }
    Err(MobiusError::NoConvergence(config.max_iterations))
}

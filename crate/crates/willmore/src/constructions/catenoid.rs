//! Two spheres joined by catenoidal bridges.
//!
//! `Γ_t` glues the spheres `±S(t)` of radius `cosh²t` centered at `±ξ(t)e₃`
//! to the catenoid `(cosh z, z)`, `|z| ≤ t`. The Möbius map `Φ_t(p) = T(λp)`
//! sends it to `Σ_t`: the concentric spheres of radii `σ` and `1/σ` joined by a
//! small handle at `−e₃`. Copies of that handle at further points `p_i` give
//! the genus-g surfaces `Σ^{1,g}_t`, and `Σ^{2,g}_t = T(Σ^{1,g}_t)`.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use nalgebra::{Rotation3, Unit};
use serde::{Deserialize, Serialize};

use super::sphere_holes::{sphere_with_holes, Hole};
use super::{resample_curve, ConstructionError};
use crate::mesh::{orient_inward, revolve_band, revolve_closed, revolve_points, weld_exact, TriangleMesh};
use crate::mobius::stereographic_t;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatenoidBridgeParams {
    pub t: f64,
    /// Sphere radius `cosh²t`.
    pub r_t: f64,
    /// Sphere center height `sinh t cosh t + t`.
    pub xi_t: f64,
    /// Opening angle with `cos(α/2) = tanh t`.
    pub alpha_t: f64,
    pub sigma_t: f64,
    pub lambda_t: f64,
    pub rho_sigma: f64,
    pub zeta_sigma: f64,
    /// Angular radius about `−e₃` of the handle of `Σ_t`.
    pub footprint: f64,
}

/// `ξ(t)/r(t) = tanh t + t/cosh²t`; the spheres `±S(t)` are disjoint iff it exceeds 1.
pub fn disjointness_ratio(t: f64) -> f64 {
    t.tanh() + t / t.cosh().powi(2)
}

/// Smallest `t` with disjoint spheres, by bisection to 1e−12.
pub fn catenoid_t_min() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        let (mut lo, mut hi) = (0.0, 5.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if disjointness_ratio(mid) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    })
}

pub fn catenoid_bridge_params(t: f64) -> Result<CatenoidBridgeParams, ConstructionError> {
    let t_min = catenoid_t_min();
    if !(t.is_finite() && t > t_min) {
        return Err(ConstructionError::SpheresIntersect { t, t_min });
    }
    let c = disjointness_ratio(t);
    let sigma = 1.0 / (c + (c * c - 1.0).sqrt());
    let ch2 = t.cosh().powi(2);
    let rho = 2.0 * sigma / (1.0 - sigma * sigma);
    let lambda = rho / ch2;
    let mut p = CatenoidBridgeParams {
        t,
        r_t: ch2,
        xi_t: t.sinh() * t.cosh() + t,
        alpha_t: 2.0 * t.tanh().acos(),
        sigma_t: sigma,
        lambda_t: lambda,
        rho_sigma: rho,
        zeta_sigma: -(1.0 + sigma * sigma) / (1.0 - sigma * sigma),
        footprint: 0.0,
    };
    let (x, z) = p.phi((t.cosh(), -t));
    p.footprint = x.atan2(-z);
    Ok(p)
}

impl CatenoidBridgeParams {
    /// `Φ_t` restricted to the xz-plane.
    pub fn phi(&self, p: (f64, f64)) -> (f64, f64) {
        let (x, z) = (self.lambda_t * p.0, self.lambda_t * p.1 - 1.0);
        let r2 = x * x + z * z;
        (2.0 * x / r2, 1.0 + 2.0 * z / r2)
    }

    /// `8π − 4π(1 − tanh t)`.
    pub fn gamma_energy(&self) -> f64 {
        8.0 * PI - 4.0 * PI * (1.0 - self.t.tanh())
    }

    /// `8π − 4π(g+1)(1 − tanh t)`.
    pub fn sigma_energy(&self, genus: usize) -> f64 {
        8.0 * PI - 4.0 * PI * (genus as f64 + 1.0) * (1.0 - self.t.tanh())
    }

    fn lower_sphere(&self, u: f64) -> (f64, f64) {
        let psi = (PI - 0.5 * self.alpha_t) * u;
        (self.r_t * psi.sin(), -self.xi_t - self.r_t * psi.cos())
    }

    fn upper_sphere(&self, u: f64) -> (f64, f64) {
        let psi = (PI - 0.5 * self.alpha_t) * (1.0 - u);
        (self.r_t * psi.sin(), self.xi_t + self.r_t * psi.cos())
    }

    fn catenoid(&self, u: f64) -> (f64, f64) {
        let z = self.t * (2.0 * u - 1.0);
        (z.cosh(), z)
    }

    /// Profile of `Γ_t` from the bottom pole to the top pole.
    pub fn gamma_profile(&self, n_phi: usize) -> Vec<(f64, f64)> {
        let h_max = TAU * self.r_t / n_phi as f64;
        let h_min = TAU / n_phi as f64;
        let spacing = move |x: f64, _z: f64| (TAU * x / n_phi as f64).clamp(h_min, h_max);
        let mut pts = resample_curve(&|u| self.lower_sphere(u), 0.0, 1.0, &spacing);
        pts.pop();
        let mut neck = resample_curve(&|u| self.catenoid(u), 0.0, 1.0, &spacing);
        neck.pop();
        pts.extend(neck);
        pts.extend(resample_curve(&|u| self.upper_sphere(u), 0.0, 1.0, &spacing));
        pts[0].0 = 0.0;
        let last = pts.len() - 1;
        pts[last].0 = 0.0;
        pts
    }

    fn image_spacing(&self, n_phi: usize) -> impl Fn(f64, f64) -> f64 {
        let h_max = TAU * self.sigma_t / n_phi as f64;
        let h_min = h_max / 16.0;
        move |x: f64, _z: f64| (TAU * x / n_phi as f64).clamp(h_min, h_max)
    }

    /// Arc of the sphere of radius `r` about the origin, by angle from `−e₃`.
    fn arc(r: f64, a0: f64, a1: f64, spacing: &dyn Fn(f64, f64) -> f64) -> Vec<(f64, f64)> {
        resample_curve(&|u| {
            let a = a0 + (a1 - a0) * u;
            (r * a.sin(), -r * a.cos())
        }, 0.0, 1.0, spacing)
    }

    fn neck_image(&self, spacing: &dyn Fn(f64, f64) -> f64) -> Vec<(f64, f64)> {
        resample_curve(&|u| self.phi(self.catenoid(u)), 0.0, 1.0, spacing)
    }

    fn cap_angles(&self) -> (f64, f64) {
        let lo = self.phi(self.catenoid(0.0));
        let hi = self.phi(self.catenoid(1.0));
        (lo.0.atan2(-lo.1), hi.0.atan2(-hi.1))
    }

    /// Profile of `Σ_t` from the north pole of the inner sphere to that of the outer sphere.
    pub fn sigma_profile(&self, n_phi: usize) -> Vec<(f64, f64)> {
        let spacing = self.image_spacing(n_phi);
        let (b_in, b_out) = self.cap_angles();
        let mut pts = Self::arc(self.sigma_t, PI, b_in, &spacing);
        pts.pop();
        let mut neck = self.neck_image(&spacing);
        neck.pop();
        pts.extend(neck);
        pts.extend(Self::arc(1.0 / self.sigma_t, b_out, PI, &spacing));
        pts[0].0 = 0.0;
        let last = pts.len() - 1;
        pts[last].0 = 0.0;
        pts
    }

    /// The part of `Σ_t` within angle `eps` of `−e₃`, from the inner loop to the outer loop.
    pub fn handle_profile(&self, eps: f64, n_phi: usize) -> Result<Vec<(f64, f64)>, ConstructionError> {
        let (b_in, b_out) = self.cap_angles();
        if !(eps > b_in.max(b_out)) || eps >= 0.5 * PI {
            return Err(ConstructionError::HandleOverlap(format!(
                "handle radius {eps} must lie between the footprint {} and π/2",
                b_in.max(b_out)
            )));
        }
        let spacing = self.image_spacing(n_phi);
        let mut pts = Self::arc(self.sigma_t, eps, b_in, &spacing);
        pts.pop();
        let mut neck = self.neck_image(&spacing);
        neck.pop();
        pts.extend(neck);
        pts.extend(Self::arc(1.0 / self.sigma_t, b_out, eps, &spacing));
        Ok(pts)
    }
}

/// The axisymmetric surface `Γ_t`.
pub fn build_gamma_t(t: f64, n_phi: usize) -> Result<TriangleMesh, ConstructionError> {
    let p = catenoid_bridge_params(t)?;
    Ok(revolve_points(&p.gamma_profile(n_phi), n_phi)?)
}

/// The catenoid segment `{(cosh z cos φ, cosh z sin φ, z) : |z| ≤ t}` as an open band.
pub fn catenoid_band(t: f64, n_z: usize, n_phi: usize) -> Result<TriangleMesh, ConstructionError> {
    let pts: Vec<(f64, f64)> = (0..=n_z)
        .map(|k| {
            let z = t * (2.0 * k as f64 / n_z as f64 - 1.0);
            (z.cosh(), z)
        })
        .collect();
    Ok(revolve_band(&pts, n_phi)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaVariant {
    /// `Σ^{1,g}_t`: concentric spheres joined by `g + 1` handles.
    One,
    /// `Σ^{2,g}_t = T(Σ^{1,g}_t)`.
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaConfig {
    /// Angular radius of each transplanted handle; `None` uses `eps_factor × footprint`.
    pub eps_handle: Option<f64>,
    pub eps_factor: f64,
    pub n_phi: usize,
    /// Handle points on the unit sphere; `None` uses the default layout with `p₀ = −e₃`.
    pub handle_points: Option<Vec<Vec3>>,
    pub smoothing_iterations: usize,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        Self { eps_handle: None, eps_factor: 1.15, n_phi: 96, handle_points: None, smoothing_iterations: 20 }
    }
}

/// Smallest angle between `e₃` and a handle boundary for `Σ^{2,g}_t`.
pub const MIN_POLE_MARGIN: f64 = PI / 4.0;

fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// Spreads `count` points on the unit sphere by repulsion, keeping `p₀ = −e₃` fixed.
fn spread_points(count: usize) -> Vec<Vec3> {
    let south = -e3();
    let mut pts = vec![south];
    for i in 1..count {
        let polar = 0.8 * PI;
        let az = TAU * i as f64 / (count - 1).max(1) as f64;
        pts.push(Vec3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), -polar.cos()));
    }
    for _ in 0..2000 {
        let snapshot = pts.clone();
        for i in 1..count {
            let mut force = Vec3::zeros();
            for (j, q) in snapshot.iter().enumerate() {
                if i != j {
                    let d = snapshot[i] - q;
                    force += d / d.norm().powi(3);
                }
            }
            pts[i] = (pts[i] + force * 0.01).normalize();
        }
    }
    pts
}

/// `count` points on a ring about `−e₃`, as tight as the separation `2ε + gap` allows.
fn ring_points(count: usize, eps: f64) -> Result<Vec<Vec3>, ConstructionError> {
    const GAP: f64 = 0.1;
    let ring = |a: f64| -> Vec<Vec3> {
        (0..count)
            .map(|k| {
                let az = TAU * k as f64 / count as f64;
                Vec3::new(a.sin() * az.cos(), a.sin() * az.sin(), -a.cos())
            })
            .collect()
    };
    let separation = |a: f64| {
        let p = ring(a);
        p[0].dot(&p[1]).clamp(-1.0, 1.0).acos()
    };
    let need = 2.0 * eps + GAP;
    if separation(0.5 * PI) < need {
        return Err(ConstructionError::HandleOverlap(format!(
            "{count} handles of radius {eps:.4} do not fit around -e3"
        )));
    }
    let (mut lo, mut hi) = (0.0, 0.5 * PI);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if separation(mid) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ring(hi))
}

fn rotation_to(p: Vec3) -> Rotation3<f64> {
    Rotation3::rotation_between(&(-e3()), &p)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::x()), PI))
}

fn resolve_layout(
    genus: usize,
    variant: SigmaVariant,
    eps: f64,
    custom: Option<&Vec<Vec3>>,
) -> Result<Vec<Vec3>, ConstructionError> {
    let pts: Vec<Vec3> = match custom {
        Some(p) => {
            if p.len() != genus + 1 {
                return Err(ConstructionError::Parameter(format!(
                    "genus {genus} needs {} handle points, got {}",
                    genus + 1,
                    p.len()
                )));
            }
            p.iter().map(|q| q.normalize()).collect()
        }
        None => match (variant, genus) {
            (_, 0) => vec![-e3()],
            (SigmaVariant::One, 1) => vec![-e3(), e3()],
            (SigmaVariant::One, g) => spread_points(g + 1),
            (SigmaVariant::Two, g) => ring_points(g + 1, eps)?,
        },
    };
    for i in 0..pts.len() {
        for j in 0..i {
            let ang = pts[i].dot(&pts[j]).clamp(-1.0, 1.0).acos();
            if ang <= 2.0 * eps {
                return Err(ConstructionError::HandleOverlap(format!(
                    "handle points {j} and {i} are {ang:.4} rad apart, need more than 2ε = {:.4}",
                    2.0 * eps
                )));
            }
        }
    }
    if variant == SigmaVariant::Two {
        for (i, p) in pts.iter().enumerate() {
            let d = (e3() - p).norm();
            if d <= 1.0 {
                return Err(ConstructionError::PoleClearance(format!("|e3 − p_{i}| = {d:.4} <= 1")));
            }
            let margin = p.dot(&e3()).clamp(-1.0, 1.0).acos() - eps;
            if margin < MIN_POLE_MARGIN {
                return Err(ConstructionError::PoleClearance(format!(
                    "handle {i} reaches within {margin:.4} rad of e3 (minimum {MIN_POLE_MARGIN:.4})"
                )));
            }
        }
    }
    Ok(pts)
}

/// `Σ^{1,g}_t` or `Σ^{2,g}_t` as an inward oriented closed mesh of genus `g`.
pub fn build_sigma_g(
    t: f64,
    genus: usize,
    variant: SigmaVariant,
    config: &SigmaConfig,
) -> Result<TriangleMesh, ConstructionError> {
    let p = catenoid_bridge_params(t)?;
    if config.n_phi < 8 {
        return Err(ConstructionError::Parameter("n_phi must be >= 8".into()));
    }
    let eps = match config.eps_handle {
        Some(e) => {
            if e <= p.footprint {
                return Err(ConstructionError::HandleOverlap(format!(
                    "ε = {e} does not cover the handle footprint {:.4} at t = {t}",
                    p.footprint
                )));
            }
            e
        }
        None => config.eps_factor * p.footprint,
    };
    let layout = resolve_layout(genus, variant, eps, config.handle_points.as_ref())?;
    let n_phi = config.n_phi;

    let mesh = if genus == 0 && config.handle_points.is_none() {
        match variant {
            SigmaVariant::One => revolve_points(&p.sigma_profile(n_phi), n_phi)?,
            SigmaVariant::Two => {
                let pts: Vec<(f64, f64)> = p
                    .gamma_profile(n_phi)
                    .into_iter()
                    .map(|(x, z)| (p.lambda_t * x, p.lambda_t * z))
                    .collect();
                revolve_points(&pts, n_phi)?
            }
        }
    } else if genus == 1 && variant == SigmaVariant::One && config.handle_points.is_none() {
        let handle = p.handle_profile(eps, n_phi)?;
        let spacing = p.image_spacing(n_phi);
        let mut lp = handle.clone();
        lp.pop();
        lp.extend(CatenoidBridgeParams::arc(1.0 / p.sigma_t, eps, PI - eps, &spacing));
        lp.pop();
        lp.extend(handle.iter().rev().map(|&(x, z)| (x, -z)));
        lp.pop();
        let mut back = CatenoidBridgeParams::arc(p.sigma_t, PI - eps, eps, &spacing);
        back.pop();
        lp.extend(back);
        revolve_closed(&lp, n_phi)?
    } else {
        transplant(&p, &layout, eps, variant, config)?
    };
    let mesh = orient_inward(&mesh)?.with_genus_hint(genus);
    crate::mesh::ensure_valid(&mesh)?;
    Ok(mesh)
}

fn transplant(
    p: &CatenoidBridgeParams,
    layout: &[Vec3],
    eps: f64,
    variant: SigmaVariant,
    config: &SigmaConfig,
) -> Result<TriangleMesh, ConstructionError> {
    let n_phi = config.n_phi;
    let band = revolve_band(&p.handle_profile(eps, n_phi)?, n_phi)?;
    let rows = band.vertices.len() / n_phi;
    let map = |q: Vec3| -> Result<Vec3, ConstructionError> {
        match variant {
            SigmaVariant::One => Ok(q),
            SigmaVariant::Two => Ok(stereographic_t(q)?),
        }
    };
    let mut out = TriangleMesh::new(Vec::new(), Vec::new());
    let (mut inner_holes, mut outer_holes) = (Vec::new(), Vec::new());
    for &pi in layout {
        let rot = rotation_to(pi);
        let mut h = band.map_vertices(|q| rot * q);
        for v in &mut h.vertices {
            *v = map(*v)?;
        }
        let inner: Vec<Vec3> = h.vertices[..n_phi].to_vec();
        let outer: Vec<Vec3> = h.vertices[(rows - 1) * n_phi..].to_vec();
        inner_holes.push(Hole { loop_points: inner, inside: map(pi * p.sigma_t)? });
        outer_holes.push(Hole { loop_points: outer, inside: map(pi / p.sigma_t)? });
        out.append(&h);
    }
    let (c_in, r_in, c_out, r_out) = match variant {
        SigmaVariant::One => (Vec3::zeros(), p.sigma_t, Vec3::zeros(), 1.0 / p.sigma_t),
        SigmaVariant::Two => (e3() * p.zeta_sigma, p.rho_sigma, -e3() * p.zeta_sigma, p.rho_sigma),
    };
    out.append(&sphere_with_holes(c_in, r_in, &inner_holes, config.smoothing_iterations)?);
    out.append(&sphere_with_holes(c_out, r_out, &outer_holes, config.smoothing_iterations)?);
    Ok(weld_exact(&out))
}

//! Periodic graph bumps `u_{n,t}(x) = (t/n)·u(nx)` glued into a flat square
//! patch of a closed host surface.

use std::sync::Arc;

use serde::Serialize;

use super::ConstructionError;
use crate::curvature::compute_curvatures;
use crate::functionals;
use crate::mesh::{orient_inward, weld_exact, TriangleMesh};
use crate::Vec3;

/// Height tolerance for patch vertices, relative to the patch size.
const FLAT_TOL: f64 = 1e-9;

/// A closed mesh with a marked flat square `origin + size·(x e₁ + y e₂)`, `(x, y) ∈ [0, 1]²`,
/// whose outward normal is `e₁ × e₂`.
#[derive(Debug, Clone)]
pub struct PlanarPatchHost {
    pub mesh: TriangleMesh,
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub size: f64,
}

/// A compactly supported bump on the unit square.
#[derive(Clone)]
pub enum BumpProfile {
    /// `height·exp(1 − 1/(1 − s²))`, `s = |x − (½, ½)| / radius`.
    Smooth { radius: f64, height: f64 },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for BumpProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Smooth { radius, height } => write!(f, "Smooth {{ radius: {radius}, height: {height} }}"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BumpProfile {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Smooth { radius, height } => {
                let s2 = ((x - 0.5).powi(2) + (y - 0.5).powi(2)) / (radius * radius);
                if s2 >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / (1.0 - s2)).exp()
                }
            }
            Self::Custom(f) => f(x, y),
        }
    }

    /// Checks that the profile vanishes on a band along the square boundary.
    pub fn validate(&self) -> Result<(), ConstructionError> {
        if let Self::Smooth { radius, height } = self {
            if !(*radius > 0.0 && *radius <= 0.5 && height.is_finite()) {
                return Err(ConstructionError::Parameter(format!("bump radius {radius} outside (0, 0.5]")));
            }
        }
        let m = 64;
        for i in 0..=m {
            let s = i as f64 / m as f64;
            for (x, y) in [(s, 0.0), (s, 1.0), (0.0, s), (1.0, s)] {
                let v = self.eval(x, y);
                if !v.is_finite() || v != 0.0 {
                    return Err(ConstructionError::Parameter(format!("bump does not vanish at ({x}, {y})")));
                }
            }
        }
        Ok(())
    }
}

fn axis_grid(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    lo + (hi - lo) * i as f64 / n as f64
}

impl PlanarPatchHost {
    /// The box `[0,1]² × [−depth, 0]` with `cells` grid cells per unit length;
    /// the patch is its top face.
    pub fn slab(cells: usize, depth: f64) -> Result<Self, ConstructionError> {
        if cells < 2 || !(depth > 0.0) {
            return Err(ConstructionError::Parameter("slab needs at least 2 cells and positive depth".into()));
        }
        let nz = ((depth * cells as f64).ceil() as usize).max(1);
        let mut mesh = TriangleMesh::new(Vec::new(), Vec::new());
        let lo = [0.0, 0.0, -depth];
        let hi = [1.0, 1.0, 0.0];
        let counts = [cells, cells, nz];
        for axis in 0..3 {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [lo[axis], hi[axis]] {
                let mut verts = Vec::new();
                for i in 0..=counts[a] {
                    for j in 0..=counts[b] {
                        let mut p = [0.0; 3];
                        p[axis] = side;
                        p[a] = axis_grid(lo[a], hi[a], counts[a], i);
                        p[b] = axis_grid(lo[b], hi[b], counts[b], j);
                        verts.push(Vec3::new(p[0], p[1], p[2]));
                    }
                }
                let w = counts[b] + 1;
                let mut faces = Vec::new();
                for i in 0..counts[a] {
                    for j in 0..counts[b] {
                        let (v00, v01, v10, v11) = (i * w + j, i * w + j + 1, (i + 1) * w + j, (i + 1) * w + j + 1);
                        faces.push([v00, v10, v11]);
                        faces.push([v00, v11, v01]);
                    }
                }
                mesh.append(&TriangleMesh::new(verts, faces));
            }
        }
        let mesh = orient_inward(&weld_exact(&mesh))?.with_genus_hint(0);
        Ok(Self { mesh, origin: Vec3::zeros(), e1: Vec3::x(), e2: Vec3::y(), size: 1.0 })
    }

    fn normal(&self) -> Vec3 {
        self.e1.cross(&self.e2)
    }

    /// Patch coordinates `(x, y)` of a vertex lying on the patch.
    fn coords(&self, p: Vec3) -> Option<(f64, f64)> {
        let d = p - self.origin;
        let (x, y, h) = (d.dot(&self.e1) / self.size, d.dot(&self.e2) / self.size, d.dot(&self.normal()));
        let eps = 1e-12;
        (h.abs() <= FLAT_TOL * self.size && (-eps..=1.0 + eps).contains(&x) && (-eps..=1.0 + eps).contains(&y))
            .then_some((x, y))
    }

    /// Patch membership per vertex; fails unless the patch faces tile the square.
    pub fn patch_vertices(&self) -> Result<Vec<bool>, ConstructionError> {
        if (self.e1.norm() - 1.0).abs() > 1e-12 || (self.e2.norm() - 1.0).abs() > 1e-12 || self.e1.dot(&self.e2).abs() > 1e-12 {
            return Err(ConstructionError::Patch("patch frame is not orthonormal".into()));
        }
        let on: Vec<bool> = self.mesh.vertices.iter().map(|&p| self.coords(p).is_some()).collect();
        let covered: f64 = (0..self.mesh.faces.len())
            .filter(|&f| self.mesh.faces[f].iter().all(|&v| on[v]))
            .map(|f| self.mesh.face_area(f))
            .sum();
        let expect = self.size * self.size;
        if (covered - expect).abs() > 1e-9 * expect {
            return Err(ConstructionError::Patch(format!("flat faces cover {covered} of the patch area {expect}")));
        }
        Ok(on)
    }

    /// Patch vertices whose whole one-ring lies in the patch.
    pub fn interior_patch_vertices(&self) -> Result<Vec<bool>, ConstructionError> {
        let on = self.patch_vertices()?;
        let nbrs = self.mesh.vertex_neighbors();
        Ok((0..on.len()).map(|i| on[i] && nbrs[i].iter().all(|&j| on[j])).collect())
    }
}

/// Replaces the patch by the graph of `u_{n,t}` (periodically extended `u`).
pub fn bump_graph_surface(
    host: &PlanarPatchHost,
    u: &BumpProfile,
    n: usize,
    t_amp: f64,
) -> Result<TriangleMesh, ConstructionError> {
    if n == 0 || !(-1.0..=1.0).contains(&t_amp) {
        return Err(ConstructionError::Parameter(format!("need n ≥ 1 and t in [−1, 1], got n = {n}, t = {t_amp}")));
    }
    u.validate()?;
    let on = host.patch_vertices()?;
    let up = host.normal();
    let nf = n as f64;
    let mut mesh = host.mesh.clone();
    for (i, p) in mesh.vertices.iter_mut().enumerate() {
        if !on[i] {
            continue;
        }
        let (x, y) = host.coords(*p).expect("patch vertex");
        let (sx, sy) = ((nf * x).fract(), (nf * y).fract());
        *p += up * (host.size * t_amp / nf * u.eval(sx, sy));
    }
    Ok(mesh)
}

/// `∫H dA` summed over the interior patch vertices of a bumped host.
pub fn patch_total_mean_curvature(host: &PlanarPatchHost, mesh: &TriangleMesh) -> Result<f64, ConstructionError> {
    let inside = host.interior_patch_vertices()?;
    let c = compute_curvatures(mesh)?;
    Ok((0..inside.len()).filter(|&i| inside[i]).map(|i| c.mean[i] * c.area[i]).sum())
}

/// Parameters found by [`solve_t_for_target`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BumpSolution {
    pub n: usize,
    pub t_amp: f64,
    pub achieved: f64,
}

/// Largest number of copies per side tried by [`solve_t_for_target`].
pub const MAX_COPIES: usize = 64;
const TARGET_TOL: f64 = 1e-2;

fn ratio_of(host: &PlanarPatchHost, u: &BumpProfile, n: usize, t: f64) -> Result<f64, ConstructionError> {
    Ok(functionals::evaluate(&bump_graph_surface(host, u, n, t)?)?.t)
}

/// Finds `(n, t)` with `|T(Σ_{n,t}) − target| ≤ 10⁻²`, doubling `n` until the
/// values at `t = ±1` bracket the target and then bisecting in `t`.
pub fn solve_t_for_target(host: &PlanarPatchHost, u: &BumpProfile, target: f64) -> Result<BumpSolution, ConstructionError> {
    if !target.is_finite() {
        return Err(ConstructionError::Parameter("target ratio must be finite".into()));
    }
    let t0 = ratio_of(host, u, 1, 0.0)?;
    if (t0 - target).abs() <= TARGET_TOL {
        return Ok(BumpSolution { n: 1, t_amp: 0.0, achieved: t0 });
    }
    let mut best = t0;
    let mut n = 1;
    while n <= MAX_COPIES {
        for end in [1.0, -1.0] {
            let t1 = ratio_of(host, u, n, end)?;
            if (t1 - target).abs() < (best - target).abs() {
                best = t1;
            }
            if (t0 - target) * (t1 - target) > 0.0 {
                continue;
            }
            let (mut a, mut b, mut fa) = (0.0, end, t0 - target);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = ratio_of(host, u, n, m)? - target;
                if fm.abs() <= TARGET_TOL {
                    return Ok(BumpSolution { n, t_amp: m, achieved: fm + target });
                }
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    (a, fa) = (m, fm);
                }
            }
        }
        n *= 2;
    }
    Err(ConstructionError::TargetUnreached { target, n_max: MAX_COPIES, best })
}

/// Area of the graph of `u` over the unit square by midpoint quadrature.
pub fn graph_area(u: &BumpProfile, samples: usize) -> f64 {
    let h = 1.0 / samples as f64;
    let d = 1e-6;
    let mut s = 0.0;
    for i in 0..samples {
        for j in 0..samples {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let ux = (u.eval(x + d, y) - u.eval(x - d, y)) / (2.0 * d);
            let uy = (u.eval(x, y + d) - u.eval(x, y - d)) / (2.0 * d);
            s += (1.0 + ux * ux + uy * uy).sqrt() * h * h;
        }
    }
    s
}

//! Oriented closed triangle meshes.
//!
//! Faces are wound so that `(b - a) × (c - a)` points into the enclosed
//! region: seen from outside, every face is traversed clockwise.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::axisym::ProfileCurve;
use crate::Vec3;

/// Relative tolerance for degenerate faces, scaled by the squared bounding-box diagonal.
pub const DEGENERATE_AREA_TOL: f64 = 1e-12;

/// Largest icosphere subdivision level accepted by [`build_icosphere`].
pub const MAX_ICOSPHERE_SUBDIVISIONS: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("mesh is not a closed oriented manifold: {0}")]
    NotManifold(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub genus_hint: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDiagnostics {
    pub closed_manifold: bool,
    pub orientation_coherent: bool,
    pub no_isolated_vertices: bool,
    pub no_degenerate_faces: bool,
    pub min_face_area: f64,
    pub max_face_area: f64,
    pub min_edge_length: f64,
    pub max_edge_length: f64,
    pub euler_characteristic: i64,
    pub genus: Option<usize>,
}

impl MeshDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.closed_manifold
            && self.orientation_coherent
            && self.no_isolated_vertices
            && self.no_degenerate_faces
            && self.genus.is_some()
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        Self { vertices, faces, genus_hint: None }
    }

    pub fn with_genus_hint(mut self, g: usize) -> Self {
        self.genus_hint = Some(g);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn corners(&self, f: usize) -> (Vec3, Vec3, Vec3) {
        let [a, b, c] = self.faces[f];
        (self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Unnormalized face normal `(b - a) × (c - a)` (twice the area, inward).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let (a, b, c) = self.corners(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_normal(f).norm()
    }

    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Unique undirected edges as `(min, max)` pairs, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if seen.insert(key, ()).is_none() {
                    out.push(key);
                }
            }
        }
        out
    }

    pub fn flipped(&self) -> Self {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        Self { vertices: self.vertices.clone(), faces, genus_hint: self.genus_hint }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_vertices(|p| p * s)
    }

    pub fn translated(&self, d: Vec3) -> Self {
        self.map_vertices(|p| p + d)
    }

    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            faces: self.faces.clone(),
            genus_hint: self.genus_hint,
        }
    }

    /// Appends another mesh, returning the index offset of its vertices.
    pub fn append(&mut self, other: &TriangleMesh) -> usize {
        let off = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        off
    }

    /// Sorted one-ring neighbours per vertex.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges() {
            nb[a].push(b);
            nb[b].push(a);
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        nb
    }

    /// Minimum interior angle over all faces, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut m = f64::INFINITY;
        for f in 0..self.faces.len() {
            let (a, b, c) = self.corners(f);
            for (p, q, r) in [(a, b, c), (b, c, a), (c, a, b)] {
                let u = q - p;
                let v = r - p;
                let ang = u.cross(&v).norm().atan2(u.dot(&v));
                m = m.min(ang);
            }
        }
        m
    }
}

/// Structural and geometric diagnostics; never fails.
pub fn validate(mesh: &TriangleMesh) -> MeshDiagnostics {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    let mut used = vec![false; mesh.vertices.len()];
    let mut index_ok = true;
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a >= used.len() || b >= used.len() || a == b {
                index_ok = false;
                continue;
            }
            used[a] = true;
            *directed.entry((a, b)).or_default() += 1;
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let closed_manifold = index_ok && undirected.values().all(|&c| c == 2);
    let orientation_coherent = index_ok
        && directed
            .iter()
            .all(|(&(a, b), &c)| c == 1 && directed.get(&(b, a)) == Some(&1));
    let no_isolated_vertices = used.iter().all(|&u| u);

    let diag2 = mesh.bbox_diagonal().powi(2);
    let (mut amin, mut amax) = (f64::INFINITY, 0.0f64);
    if index_ok {
        for f in 0..mesh.faces.len() {
            let a = mesh.face_area(f);
            amin = amin.min(a);
            amax = amax.max(a);
        }
    }
    let (mut emin, mut emax) = (f64::INFINITY, 0.0f64);
    for &(a, b) in undirected.keys() {
        let l = (mesh.vertices[a] - mesh.vertices[b]).norm();
        emin = emin.min(l);
        emax = emax.max(l);
    }
    let no_degenerate_faces = index_ok && amin > DEGENERATE_AREA_TOL * diag2;
    let chi = mesh.vertices.len() as i64 - undirected.len() as i64 + mesh.faces.len() as i64;
    let genus = if closed_manifold && chi <= 2 && (2 - chi) % 2 == 0 {
        Some(((2 - chi) / 2) as usize)
    } else {
        None
    };
    MeshDiagnostics {
        closed_manifold,
        orientation_coherent,
        no_isolated_vertices,
        no_degenerate_faces,
        min_face_area: amin,
        max_face_area: amax,
        min_edge_length: emin,
        max_edge_length: emax,
        euler_characteristic: chi,
        genus,
    }
}

/// Returns an error describing the first failed check.
pub fn ensure_valid(mesh: &TriangleMesh) -> Result<MeshDiagnostics, MeshError> {
    let d = validate(mesh);
    if !d.closed_manifold {
        return Err(MeshError::NotManifold("boundary or non-manifold edge".into()));
    }
    if !d.orientation_coherent {
        return Err(MeshError::NotManifold("inconsistent face orientation".into()));
    }
    if !d.no_isolated_vertices {
        return Err(MeshError::Degenerate("isolated vertex".into()));
    }
    if !d.no_degenerate_faces {
        return Err(MeshError::Degenerate(format!("face area {:e} below tolerance", d.min_face_area)));
    }
    if d.genus.is_none() {
        return Err(MeshError::NotManifold(format!("Euler characteristic {}", d.euler_characteristic)));
    }
    Ok(d)
}

pub fn build_icosphere(subdivisions: usize, radius: f64) -> Result<TriangleMesh, MeshError> {
    if subdivisions > MAX_ICOSPHERE_SUBDIVISIONS {
        return Err(MeshError::Resource(format!(
            "icosphere subdivisions {subdivisions} > {MAX_ICOSPHERE_SUBDIVISIONS}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(MeshError::InvalidGeometry(format!("radius {radius}")));
    }
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Vec3::new(c[0], c[1], c[2]).normalize())
    .collect();
    // Outward counter-clockwise; flipped at the end.
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vs: &mut Vec<Vec3>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vs.push(((vs[a] + vs[b]) * 0.5).normalize());
                vs.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    let faces = faces.into_iter().map(|[a, b, c]| [a, c, b]).collect();
    Ok(TriangleMesh { vertices, faces, genus_hint: Some(0) })
}

pub fn build_torus(major_r: f64, minor_r: f64, n_u: usize, n_v: usize) -> Result<TriangleMesh, MeshError> {
    if !(minor_r > 0.0 && major_r > 0.0) || minor_r >= major_r {
        return Err(MeshError::InvalidGeometry(format!(
            "torus needs 0 < minor_r < major_r, got R = {major_r}, r = {minor_r}"
        )));
    }
    if n_u < 8 || n_v < 8 {
        return Err(MeshError::InvalidGeometry("torus grid needs n_u, n_v >= 8".into()));
    }
    let mut vertices = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        let u = std::f64::consts::TAU * i as f64 / n_u as f64;
        for j in 0..n_v {
            let v = std::f64::consts::TAU * j as f64 / n_v as f64;
            let rho = major_r + minor_r * v.cos();
            vertices.push(Vec3::new(rho * u.cos(), rho * u.sin(), minor_r * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % n_u) * n_v + (j % n_v);
    let mut faces = Vec::with_capacity(2 * n_u * n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([p00, p11, p10]);
            faces.push([p00, p01, p11]);
        }
    }
    Ok(TriangleMesh { vertices, faces, genus_hint: Some(1) })
}

/// Closest point on the torus `(√(x²+y²) − R)² + z² = r²`.
pub fn torus_projection(major_r: f64, minor_r: f64) -> impl Fn(Vec3) -> Vec3 {
    move |p: Vec3| {
        let rho = (p.x * p.x + p.y * p.y).sqrt();
        let (cu, su) = if rho > 0.0 { (p.x / rho, p.y / rho) } else { (1.0, 0.0) };
        let c = Vec3::new(major_r * cu, major_r * su, 0.0);
        let d = p - c;
        c + d * (minor_r / d.norm())
    }
}

/// Revolves a profile about the z-axis. The end samples become cone vertices.
pub fn revolve_profile(curve: &ProfileCurve, n_phi: usize) -> Result<TriangleMesh, MeshError> {
    let pts: Vec<(f64, f64)> = curve.samples.iter().map(|p| (p.gamma1, p.gamma2)).collect();
    revolve_points(&pts, n_phi)
}

/// Revolves `(radius, height)` points running from one axis point to another.
/// The traversal direction's left normal becomes the inward surface normal.
pub fn revolve_points(pts: &[(f64, f64)], n_phi: usize) -> Result<TriangleMesh, MeshError> {
    if n_phi < 8 {
        return Err(MeshError::InvalidGeometry("n_phi must be >= 8".into()));
    }
    let m = pts.len();
    if m < 3 {
        return Err(MeshError::InvalidProfile("profile needs at least 3 samples".into()));
    }
    for (k, p) in pts.iter().enumerate().take(m - 1).skip(1) {
        if !(p.0 > 0.0) {
            return Err(MeshError::InvalidProfile(format!("gamma1 = {} <= 0 at interior sample {k}", p.0)));
        }
    }
    let mut vertices = Vec::with_capacity((m - 2) * n_phi + 2);
    vertices.push(Vec3::new(0.0, 0.0, pts[0].1));
    for p in &pts[1..m - 1] {
        for j in 0..n_phi {
            let phi = std::f64::consts::TAU * j as f64 / n_phi as f64;
            vertices.push(Vec3::new(p.0 * phi.cos(), p.0 * phi.sin(), p.1));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, pts[m - 1].1));
    let top = vertices.len() - 1;
    let ring = |k: usize, j: usize| 1 + (k - 1) * n_phi + (j % n_phi);
    let mut faces = Vec::with_capacity(2 * (m - 2) * n_phi);
    for j in 0..n_phi {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for k in 1..m - 2 {
        for j in 0..n_phi {
            let (a, b, c, d) = (ring(k, j), ring(k + 1, j), ring(k, j + 1), ring(k + 1, j + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    for j in 0..n_phi {
        faces.push([ring(m - 2, j), top, ring(m - 2, j + 1)]);
    }
    Ok(TriangleMesh { vertices, faces, genus_hint: Some(0) })
}

/// Closest point to `p` on the triangle `(a, b, c)`.
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Euclidean distance from `p` to the surface.
pub fn distance_to_mesh(mesh: &TriangleMesh, p: Vec3) -> f64 {
    mesh.faces
        .iter()
        .map(|&[a, b, c]| {
            (closest_point_on_triangle(p, mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]) - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Generalized winding number of the surface around `p`; −1 inside for inward orientation.
pub fn winding_number(mesh: &TriangleMesh, p: Vec3) -> f64 {
    let total: f64 = mesh
        .faces
        .iter()
        .map(|&[i, j, k]| {
            let (a, b, c) = (mesh.vertices[i] - p, mesh.vertices[j] - p, mesh.vertices[k] - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
            2.0 * num.atan2(den)
        })
        .sum();
    total / (4.0 * std::f64::consts::PI)
}

fn revolve_rings(pts: &[(f64, f64)], n_phi: usize, closed: bool) -> TriangleMesh {
    let m = pts.len();
    let mut vertices = Vec::with_capacity(m * n_phi);
    for p in pts {
        for j in 0..n_phi {
            let phi = std::f64::consts::TAU * j as f64 / n_phi as f64;
            vertices.push(Vec3::new(p.0 * phi.cos(), p.0 * phi.sin(), p.1));
        }
    }
    let ring = |k: usize, j: usize| (k % m) * n_phi + (j % n_phi);
    let rows = if closed { m } else { m - 1 };
    let mut faces = Vec::with_capacity(2 * rows * n_phi);
    for k in 0..rows {
        for j in 0..n_phi {
            let (a, b, c, d) = (ring(k, j), ring(k + 1, j), ring(k, j + 1), ring(k + 1, j + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    TriangleMesh { vertices, faces, genus_hint: None }
}

/// Revolves a closed `(radius, height)` loop that avoids the axis into a torus-like surface.
pub fn revolve_closed(pts: &[(f64, f64)], n_phi: usize) -> Result<TriangleMesh, MeshError> {
    if n_phi < 8 || pts.len() < 3 {
        return Err(MeshError::InvalidGeometry("need n_phi >= 8 and at least 3 loop points".into()));
    }
    if let Some(k) = pts.iter().position(|p| !(p.0 > 0.0)) {
        return Err(MeshError::InvalidProfile(format!("loop point {k} touches the axis")));
    }
    Ok(revolve_rings(pts, n_phi, true).with_genus_hint(1))
}

/// Revolves an open profile into a band whose first and last rings are boundary loops.
pub fn revolve_band(pts: &[(f64, f64)], n_phi: usize) -> Result<TriangleMesh, MeshError> {
    if n_phi < 8 || pts.len() < 2 {
        return Err(MeshError::InvalidGeometry("need n_phi >= 8 and at least 2 profile points".into()));
    }
    if let Some(k) = pts.iter().position(|p| !(p.0 > 0.0)) {
        return Err(MeshError::InvalidProfile(format!("profile point {k} touches the axis")));
    }
    Ok(revolve_rings(pts, n_phi, false))
}

/// Merges vertices with bitwise identical coordinates and drops unused ones.
pub fn weld_exact(mesh: &TriangleMesh) -> TriangleMesh {
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut remap = vec![usize::MAX; mesh.vertices.len()];
    let mut vertices = Vec::new();
    for f in &mesh.faces {
        for &v in f {
            if remap[v] == usize::MAX {
                let p = mesh.vertices[v];
                let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
                remap[v] = *index.entry(key).or_insert_with(|| {
                    vertices.push(p);
                    vertices.len() - 1
                });
            }
        }
    }
    let faces = mesh.faces.iter().map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]]).collect();
    TriangleMesh { vertices, faces, genus_hint: mesh.genus_hint }
}

/// Makes face orientations coherent across each connected component and then
/// chooses the inward orientation (positive enclosed volume).
pub fn orient_inward(mesh: &TriangleMesh) -> Result<TriangleMesh, MeshError> {
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let has_directed = |f: &[usize; 3], a: usize, b: usize| (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b);
    let mut faces = mesh.faces.clone();
    let mut seen = vec![false; faces.len()];
    for start in 0..faces.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(fi) = stack.pop() {
            let f = faces[fi];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let adj = &edge_faces[&(a.min(b), a.max(b))];
                if adj.len() != 2 {
                    return Err(MeshError::NotManifold(format!("edge ({a}, {b}) has {} faces", adj.len())));
                }
                let gi = if adj[0] == fi { adj[1] } else { adj[0] };
                if seen[gi] {
                    if has_directed(&faces[gi], a, b) {
                        return Err(MeshError::NotManifold("surface is not orientable".into()));
                    }
                    continue;
                }
                if has_directed(&faces[gi], a, b) {
                    let g = faces[gi];
                    faces[gi] = [g[0], g[2], g[1]];
                }
                seen[gi] = true;
                stack.push(gi);
            }
        }
    }
    let out = TriangleMesh { vertices: mesh.vertices.clone(), faces, genus_hint: mesh.genus_hint };
    if crate::functionals::enclosed_volume(&out) < 0.0 {
        Ok(out.flipped())
    } else {
        Ok(out)
    }
}

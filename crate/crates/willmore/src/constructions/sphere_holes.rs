//! Meshes of a round sphere with circular holes whose boundary loops are given
//! exactly, by constrained Delaunay triangulation in a stereographic chart.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::ConstructionError;
use crate::mesh::TriangleMesh;
use crate::Vec3;

/// Upper bound on the number of interior sample points per sphere.
pub(crate) const MAX_FILL_POINTS: usize = 1_500_000;

/// A circular hole: its boundary loop on the sphere and one point of the removed cap.
pub(crate) struct Hole {
    pub loop_points: Vec<Vec3>,
    pub inside: Vec3,
}

struct Plane {
    c: Vec3,
    n: Vec3,
}

impl Plane {
    fn of(hole: &Hole) -> Self {
        let l = &hole.loop_points;
        let c = l.iter().sum::<Vec3>() / l.len() as f64;
        let mut n = Vec3::zeros();
        for k in 0..l.len() {
            n += (l[k] - c).cross(&(l[(k + 1) % l.len()] - c));
        }
        let mut n = n.normalize();
        if (hole.inside - c).dot(&n) < 0.0 {
            n = -n;
        }
        Self { c, n }
    }

    fn contains(&self, q: Vec3) -> bool {
        (q - self.c).dot(&self.n) > 0.0
    }
}

struct Chart {
    center: Vec3,
    radius: f64,
    u: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl Chart {
    fn project(&self, q: Vec3) -> (f64, f64) {
        let d = (q - self.center) / self.radius;
        let w = 1.0 - d.dot(&self.u);
        (d.dot(&self.e1) / w, d.dot(&self.e2) / w)
    }
}

fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            Vec3::new(r * a.cos(), r * a.sin(), z)
        })
        .collect()
}

pub(crate) fn sphere_with_holes(
    center: Vec3,
    radius: f64,
    holes: &[Hole],
    smoothing: usize,
) -> Result<TriangleMesh, ConstructionError> {
    if holes.is_empty() {
        return Err(ConstructionError::Parameter("sphere mesher needs at least one hole".into()));
    }
    let planes: Vec<Plane> = holes.iter().map(Plane::of).collect();
    let spacing: Vec<f64> = holes
        .iter()
        .map(|h| {
            let l = &h.loop_points;
            (0..l.len()).map(|k| (l[(k + 1) % l.len()] - l[k]).norm()).sum::<f64>() / l.len() as f64
        })
        .collect();
    let h = spacing.iter().sum::<f64>() / spacing.len() as f64;

    let u = (holes[0].inside - center).normalize();
    let helper = if u.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = u.cross(&helper).normalize();
    let e2 = u.cross(&e1);
    let chart = Chart { center, radius, u, e1, e2 };

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut is_loop: Vec<bool> = Vec::new();
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut handle_to_vertex: Vec<usize> = Vec::new();
    let mut insert = |q: Vec3, on_loop: bool, cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>| {
        let (x, y) = chart.project(q);
        let hd = cdt
            .insert(Point2::new(x, y))
            .map_err(|e| ConstructionError::Parameter(format!("triangulation insert failed: {e:?}")))?;
        if hd.index() >= handle_to_vertex.len() {
            handle_to_vertex.resize(hd.index() + 1, usize::MAX);
        }
        if handle_to_vertex[hd.index()] == usize::MAX {
            handle_to_vertex[hd.index()] = vertices.len();
            vertices.push(q);
            is_loop.push(on_loop);
        }
        Ok::<_, ConstructionError>(hd)
    };

    for hole in holes {
        let hs: Vec<_> = hole
            .loop_points
            .iter()
            .map(|&q| insert(q, true, &mut cdt))
            .collect::<Result<_, _>>()?;
        for k in 0..hs.len() {
            cdt.add_constraint(hs[k], hs[(k + 1) % hs.len()]);
        }
    }
    let n_fill = (4.0 * PI * radius * radius / (h * h * 3f64.sqrt() / 2.0)).ceil() as usize;
    if n_fill > MAX_FILL_POINTS {
        return Err(ConstructionError::Mesh(crate::mesh::MeshError::Resource(format!(
            "{n_fill} fill points exceed the cap {MAX_FILL_POINTS}"
        ))));
    }
    for d in fibonacci_sphere(n_fill) {
        let q = center + d * radius;
        if planes.iter().any(|p| p.contains(q)) {
            continue;
        }
        let near_loop = holes
            .iter()
            .any(|hole| hole.loop_points.iter().any(|l| (l - q).norm() < 0.75 * h));
        if !near_loop {
            insert(q, false, &mut cdt)?;
        }
    }

    let mut loop_edges: HashSet<(usize, usize)> = HashSet::new();
    let mut offset = 0;
    for hole in holes {
        let n = hole.loop_points.len();
        for k in 0..n {
            let (a, b) = (offset + k, offset + (k + 1) % n);
            loop_edges.insert((a.min(b), a.max(b)));
        }
        offset += n;
    }
    let all: Vec<[usize; 3]> = cdt
        .inner_faces()
        .map(|f| f.vertices().map(|v| handle_to_vertex[v.fix().index()]))
        .collect();
    let faces = domain_component(&all, &loop_edges, &is_loop);
    let mesh = TriangleMesh::new(vertices, faces);
    Ok(smooth_on_sphere(mesh, &is_loop, center, radius, smoothing))
}

/// Faces of the component, bounded by loop edges, that contains a free vertex.
fn domain_component(faces: &[[usize; 3]], loop_edges: &HashSet<(usize, usize)>, is_loop: &[bool]) -> Vec<[usize; 3]> {
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let mut comp = vec![usize::MAX; faces.len()];
    let mut best = (0, 0usize, false);
    for start in 0..faces.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = start;
        comp[start] = id;
        let mut stack = vec![start];
        let (mut size, mut free) = (0, false);
        while let Some(fi) = stack.pop() {
            size += 1;
            let f = faces[fi];
            free |= f.iter().any(|&v| !is_loop[v]);
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let e = (a.min(b), a.max(b));
                if loop_edges.contains(&e) {
                    continue;
                }
                for &g in &edge_faces[&e] {
                    if comp[g] == usize::MAX {
                        comp[g] = id;
                        stack.push(g);
                    }
                }
            }
        }
        if (free, size) > (best.2, best.1) {
            best = (id, size, free);
        }
    }
    faces.iter().zip(&comp).filter(|(_, &c)| c == best.0).map(|(f, _)| *f).collect()
}

/// Umbrella smoothing of the free vertices, reprojected onto the sphere.
fn smooth_on_sphere(
    mut mesh: TriangleMesh,
    fixed: &[bool],
    center: Vec3,
    radius: f64,
    iterations: usize,
) -> TriangleMesh {
    let nbrs = mesh.vertex_neighbors();
    for _ in 0..iterations {
        let old = mesh.vertices.clone();
        for (i, ns) in nbrs.iter().enumerate() {
            if fixed[i] || ns.is_empty() {
                continue;
            }
            let avg = ns.iter().map(|&j| old[j]).sum::<Vec3>() / ns.len() as f64;
            mesh.vertices[i] = center + (avg - center).normalize() * radius;
        }
    }
    mesh
}

//! Conforming local refinement by longest-edge bisection.

use std::collections::HashMap;

use crate::mesh::TriangleMesh;
use crate::Vec3;

/// How new edge midpoints are placed.
pub enum MidpointRule<'a> {
    /// Straight midpoint.
    Linear,
    /// Cubic Hermite midpoint from per-vertex unit normals.
    Hermite,
    /// Straight midpoint followed by a projection onto a known surface.
    Project(&'a dyn Fn(Vec3) -> Vec3),
}

struct Refiner<'a> {
    vertices: Vec<Vec3>,
    normals: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edge_faces: HashMap<(usize, usize), [usize; 2]>,
    rule: MidpointRule<'a>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Refiner<'_> {
    fn longest(&self, f: usize) -> (usize, usize) {
        let t = self.faces[f];
        let mut best = (0.0, (0, 0));
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let l = (self.vertices[a] - self.vertices[b]).norm_squared();
            let e = key(a, b);
            if l > best.0 || (l == best.0 && e < best.1) {
                best = (l, e);
            }
        }
        best.1
    }

    fn other_face(&self, e: (usize, usize), f: usize) -> usize {
        let pair = self.edge_faces[&e];
        if pair[0] == f {
            pair[1]
        } else {
            pair[0]
        }
    }

    fn replace_edge_face(&mut self, e: (usize, usize), old: usize, new: usize) {
        if let Some(p) = self.edge_faces.get_mut(&e) {
            for slot in p.iter_mut() {
                if *slot == old {
                    *slot = new;
                    return;
                }
            }
        }
    }

    fn midpoint(&self, a: usize, b: usize) -> (Vec3, Vec3) {
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let (na, nb) = (self.normals[a], self.normals[b]);
        let mid = 0.5 * (pa + pb);
        let n = (na + nb).try_normalize(1e-300).unwrap_or(na);
        match self.rule {
            MidpointRule::Linear => (mid, n),
            MidpointRule::Hermite => {
                let d = pb - pa;
                (mid + (d.dot(&nb) * nb - d.dot(&na) * na) / 8.0, n)
            }
            MidpointRule::Project(p) => (p(mid), n),
        }
    }

    /// Splits the edge `e` in both adjacent faces.
    fn split(&mut self, e: (usize, usize)) {
        let (p, n) = self.midpoint(e.0, e.1);
        let m = self.vertices.len();
        self.vertices.push(p);
        self.normals.push(n);
        let pair = self.edge_faces.remove(&e).expect("closed mesh edge");
        let mut new_edges: Vec<((usize, usize), usize)> = Vec::new();
        for &f in &pair {
            let t = self.faces[f];
            let k = (0..3)
                .find(|&k| key(t[k], t[(k + 1) % 3]) == e)
                .expect("edge in face");
            let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let g = self.faces.len();
            self.faces[f] = [a, m, c];
            self.faces.push([m, b, c]);
            self.replace_edge_face(key(b, c), f, g);
            new_edges.push((key(a, m), f));
            new_edges.push((key(m, c), f));
            new_edges.push((key(m, c), g));
            new_edges.push((key(m, b), g));
        }
        for (edge, f) in new_edges {
            let entry = self.edge_faces.entry(edge).or_insert([usize::MAX; 2]);
            if entry[0] == usize::MAX {
                entry[0] = f;
            } else {
                entry[1] = f;
            }
        }
    }

    /// Longest-edge propagation path bisection of face `f0`.
    fn refine_face(&mut self, f0: usize) {
        let original = self.faces[f0];
        let mut guard = 0;
        while self.faces[f0] == original && guard < 10_000 {
            guard += 1;
            let mut cur = f0;
            loop {
                let e = self.longest(cur);
                let g = self.other_face(e, cur);
                if self.longest(g) == e {
                    self.split(e);
                    break;
                }
                cur = g;
            }
        }
    }
}

/// Bisects faces until `needs(corners)` is false everywhere or `max_faces` is reached.
/// `normals` are per-vertex unit normals used by the Hermite rule.
pub fn refine_where(
    mesh: &TriangleMesh,
    normals: &[Vec3],
    rule: MidpointRule<'_>,
    max_faces: usize,
    needs: impl Fn(&[Vec3; 3]) -> bool,
) -> TriangleMesh {
    let mut edge_faces: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
    for (fi, t) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let entry = edge_faces.entry(key(t[k], t[(k + 1) % 3])).or_insert([usize::MAX; 2]);
            if entry[0] == usize::MAX {
                entry[0] = fi;
            } else {
                entry[1] = fi;
            }
        }
    }
    let mut r = Refiner {
        vertices: mesh.vertices.clone(),
        normals: normals.to_vec(),
        faces: mesh.faces.clone(),
        edge_faces,
        rule,
    };
    loop {
        let mut changed = false;
        let mut f = 0;
        while f < r.faces.len() && r.faces.len() < max_faces {
            let t = r.faces[f];
            let c = [r.vertices[t[0]], r.vertices[t[1]], r.vertices[t[2]]];
            if needs(&c) {
                r.refine_face(f);
                changed = true;
            } else {
                f += 1;
            }
        }
        if !changed || r.faces.len() >= max_faces {
            break;
        }
    }
    TriangleMesh { vertices: r.vertices, faces: r.faces, genus_hint: mesh.genus_hint }
}

/// Refines towards `center` so that edges stay below `max(grading·distance, h_min)`.
pub fn refine_towards(
    mesh: &TriangleMesh,
    normals: &[Vec3],
    rule: MidpointRule<'_>,
    center: Vec3,
    grading: f64,
    h_min: f64,
    max_faces: usize,
) -> TriangleMesh {
    refine_where(mesh, normals, rule, max_faces, |c| {
        let centroid = (c[0] + c[1] + c[2]) / 3.0;
        let d = (centroid - center).norm();
        let longest = (c[0] - c[1]).norm().max((c[1] - c[2]).norm()).max((c[2] - c[0]).norm());
        longest > (grading * d).max(h_min)
    })
}

//! Cotangent mean curvature and angle-defect Gauss curvature over mixed
//! Voronoi areas.
//!
//! With inward normals the mean curvature vector `ΔX` and the normal agree on
//! convex surfaces, so a round sphere of radius r has H = 2/r and K = 1/r².

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::mesh::{MeshError, TriangleMesh};
use crate::Vec3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteCurvatures {
    pub normals: Vec<Vec3>,
    pub mean: Vec<f64>,
    pub gauss: Vec<f64>,
    pub area: Vec<f64>,
    pub mean_vector: Vec<Vec3>,
    /// Cotangent of the interior angle at each face corner.
    pub face_cot: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

impl DiscreteCurvatures {
    pub fn vertex_count(&self) -> usize {
        self.mean.len()
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    /// Cotangent Laplace–Beltrami of a scalar vertex field (negative semidefinite).
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; u.len()];
        for (f, cot) in self.faces.iter().zip(&self.face_cot) {
            for k in 0..3 {
                let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let w = cot[k];
                acc[i] += w * (u[j] - u[i]);
                acc[j] += w * (u[i] - u[j]);
            }
        }
        acc.iter().zip(&self.area).map(|(a, ar)| a / (2.0 * ar)).collect()
    }

    /// Area-weighted inner product of two vertex fields.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.area).map(|((x, y), w)| x * y * w).sum()
    }
}

fn cot(u: &Vec3, v: &Vec3) -> f64 {
    u.dot(v) / u.cross(v).norm()
}

pub fn compute_curvatures(mesh: &TriangleMesh) -> Result<DiscreteCurvatures, MeshError> {
    let n = mesh.vertices.len();
    let mut area = vec![0.0; n];
    let mut angle_sum = vec![0.0; n];
    let mut lap = vec![Vec3::zeros(); n];
    let mut normal_acc = vec![Vec3::zeros(); n];
    let mut face_cot = Vec::with_capacity(mesh.faces.len());

    for (fi, f) in mesh.faces.iter().enumerate() {
        let p = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
        let fnormal = mesh.face_normal(fi);
        let twice_area = fnormal.norm();
        if twice_area <= 0.0 || !twice_area.is_finite() {
            return Err(MeshError::Degenerate(format!("face {fi} has zero area")));
        }
        let unit = fnormal / twice_area;
        let mut angles = [0.0; 3];
        let mut cots = [0.0; 3];
        for k in 0..3 {
            let u = p[(k + 1) % 3] - p[k];
            let v = p[(k + 2) % 3] - p[k];
            angles[k] = u.cross(&v).norm().atan2(u.dot(&v));
            cots[k] = cot(&u, &v);
        }
        let tri_area = 0.5 * twice_area;
        let obtuse = angles.iter().position(|&a| a > std::f64::consts::FRAC_PI_2);
        for k in 0..3 {
            let (i, j, l) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            // edge (j, l) is opposite corner k
            let e = mesh.vertices[l] - mesh.vertices[j];
            lap[j] += cots[k] * e;
            lap[l] -= cots[k] * e;
            angle_sum[i] += angles[k];
            normal_acc[i] += angles[k] * unit;
            area[i] += match obtuse {
                None => {
                    let pq = (p[(k + 1) % 3] - p[k]).norm_squared();
                    let pr = (p[(k + 2) % 3] - p[k]).norm_squared();
                    (pr * cots[(k + 1) % 3] + pq * cots[(k + 2) % 3]) / 8.0
                }
                Some(o) if o == k => tri_area / 2.0,
                Some(_) => tri_area / 4.0,
            };
        }
        face_cot.push(cots);
    }

    let mut normals = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut gauss = Vec::with_capacity(n);
    let mut mean_vector = Vec::with_capacity(n);
    for i in 0..n {
        if !(area[i] > 0.0) {
            return Err(MeshError::Degenerate(format!("vertex {i} has zero Voronoi area")));
        }
        let nrm = normal_acc[i].norm();
        if !(nrm > 0.0) {
            return Err(MeshError::Degenerate(format!("vertex {i} has no normal")));
        }
        let nv = normal_acc[i] / nrm;
        let hv = lap[i] / (2.0 * area[i]);
        normals.push(nv);
        mean.push(hv.dot(&nv));
        gauss.push((TAU - angle_sum[i]) / area[i]);
        mean_vector.push(hv);
    }
    Ok(DiscreteCurvatures { normals, mean, gauss, area, mean_vector, face_cot, faces: mesh.faces.clone() })
}

//! Willmore energy, total mean curvature ratio, Helfrich energy and their
//! L² gradients in the normal direction.

use serde::{Deserialize, Serialize};

use crate::curvature::{compute_curvatures, DiscreteCurvatures};
use crate::mesh::{MeshError, TriangleMesh};

#[derive(Debug, thiserror::Error)]
pub enum FunctionalError {
    #[error("degenerate surface: {0}")]
    Degenerate(String),
    #[error("non-positive enclosed volume {0}; check face orientation")]
    Orientation(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "V")]
    pub v: f64,
    /// `A / V^(2/3)`; NaN when V ≤ 0.
    pub iso: f64,
    #[serde(rename = "intH")]
    pub total_mean_curvature: f64,
}

impl FunctionalReport {
    pub const CSV_HEADER: &'static str = "W,T,A,V,iso,intH";

    pub fn csv_row(&self) -> String {
        [self.w, self.t, self.a, self.v, self.iso, self.total_mean_curvature]
            .iter()
            .map(|x| fmt_sig(*x))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

pub fn willmore_energy(curv: &DiscreteCurvatures) -> f64 {
    0.25 * curv.mean.iter().zip(&curv.area).map(|(h, a)| h * h * a).sum::<f64>()
}

pub fn total_mean_curvature(curv: &DiscreteCurvatures) -> f64 {
    curv.mean.iter().zip(&curv.area).map(|(h, a)| h * a).sum()
}

pub fn total_mean_curvature_ratio(curv: &DiscreteCurvatures) -> Result<f64, FunctionalError> {
    let a = curv.total_area();
    if !(a > 0.0) {
        return Err(FunctionalError::Degenerate("zero total area".into()));
    }
    Ok(total_mean_curvature(curv) / a.sqrt())
}

pub fn area(mesh: &TriangleMesh) -> f64 {
    (0..mesh.faces.len()).map(|f| mesh.face_area(f)).sum()
}

/// `−⅓ ∫⟨f, n⟩` with inward normals, via signed tetrahedra.
pub fn enclosed_volume(mesh: &TriangleMesh) -> f64 {
    -mesh
        .faces
        .iter()
        .map(|&[a, b, c]| {
            let (p, q, r) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            p.dot(&q.cross(&r))
        })
        .sum::<f64>()
        / 6.0
}

pub fn isoperimetric_ratio(mesh: &TriangleMesh) -> Result<f64, FunctionalError> {
    let v = enclosed_volume(mesh);
    if !(v > 0.0) {
        return Err(FunctionalError::Orientation(v));
    }
    Ok(area(mesh) / v.powf(2.0 / 3.0))
}

pub fn helfrich_energy(curv: &DiscreteCurvatures, c0: f64) -> f64 {
    curv.mean
        .iter()
        .zip(&curv.area)
        .map(|(h, a)| (0.5 * h - c0).powi(2) * a)
        .sum()
}

/// Minimizer `c0 = ∫H / (2A)` and the minimum `W − T²/4`.
pub fn optimal_spontaneous_curvature(curv: &DiscreteCurvatures) -> Result<(f64, f64), FunctionalError> {
    let a = curv.total_area();
    if !(a > 0.0) {
        return Err(FunctionalError::Degenerate("zero total area".into()));
    }
    let int_h = total_mean_curvature(curv);
    let t = int_h / a.sqrt();
    Ok((int_h / (2.0 * a), willmore_energy(curv) - 0.25 * t * t))
}

pub fn report(mesh: &TriangleMesh, curv: &DiscreteCurvatures) -> Result<FunctionalReport, FunctionalError> {
    let a = curv.total_area();
    if !(a > 0.0) {
        return Err(FunctionalError::Degenerate("zero total area".into()));
    }
    let int_h = total_mean_curvature(curv);
    let v = enclosed_volume(mesh);
    let iso = if v > 0.0 { area(mesh) / v.powf(2.0 / 3.0) } else { f64::NAN };
    Ok(FunctionalReport {
        w: willmore_energy(curv),
        t: int_h / a.sqrt(),
        a,
        v,
        iso,
        total_mean_curvature: int_h,
    })
}

pub fn evaluate(mesh: &TriangleMesh) -> Result<FunctionalReport, FunctionalError> {
    let curv = compute_curvatures(mesh)?;
    report(mesh, &curv)
}

/// `T·H/(2A) − 2K/√A` per vertex.
pub fn gradient_t(curv: &DiscreteCurvatures, rep: &FunctionalReport) -> Vec<f64> {
    let a = rep.a;
    let sa = a.sqrt();
    curv.mean
        .iter()
        .zip(&curv.gauss)
        .map(|(h, k)| rep.t * h / (2.0 * a) - 2.0 * k / sa)
        .collect()
}

/// `½(ΔH + |𝕀⁰|² H)` per vertex, with `|𝕀⁰|² = H²/2 − 2K`.
pub fn gradient_w(curv: &DiscreteCurvatures) -> Vec<f64> {
    let lap = curv.laplacian(&curv.mean);
    curv.mean
        .iter()
        .zip(&curv.gauss)
        .zip(&lap)
        .map(|((h, k), l)| 0.5 * (l + (0.5 * h * h - 2.0 * k) * h))
        .collect()
}

/// Moves every vertex along its discrete normal by `t·xi[i]`.
pub fn displace_normal(mesh: &TriangleMesh, normals: &[crate::Vec3], xi: &[f64], t: f64) -> TriangleMesh {
    let mut out = mesh.clone();
    for ((v, n), x) in out.vertices.iter_mut().zip(normals).zip(xi) {
        *v += n * (t * x);
    }
    out
}

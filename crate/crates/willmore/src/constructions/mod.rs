//! Explicit surfaces: catenoid bridges, bump graphs and the graph-region
//! machinery of the connected sum.

pub mod biharmonic;
pub mod bump;
pub mod catenoid;
pub mod glued;
pub mod jet;
mod sphere_holes;

pub use biharmonic::{biharmonic_annulus, AnnulusBoundaryData, BiharmonicAnnulusSolution};
pub use bump::{bump_graph_surface, solve_t_for_target, BumpProfile, BumpSolution, PlanarPatchHost};
pub use catenoid::{build_gamma_t, build_sigma_g, catenoid_bridge_params, CatenoidBridgeParams, SigmaConfig, SigmaVariant};
pub use glued::{connected_sum_report, glued_graph_region, ConnectedSumParams, ConnectedSumReport, GluedRegionReport};
pub use jet::Jet;

use crate::mesh::MeshError;
use crate::mobius::MobiusError;

#[derive(Debug, thiserror::Error)]
pub enum ConstructionError {
    #[error("spheres ±S(t) intersect for t = {t} (need t > {t_min})")]
    SpheresIntersect { t: f64, t_min: f64 },
    #[error("handle overlap: {0}")]
    HandleOverlap(String),
    #[error("handle point too close to e3: {0}")]
    PoleClearance(String),
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("host patch is not flat: {0}")]
    Patch(String),
    #[error("target T = {target} not reached up to n = {n_max}; best {best}")]
    TargetUnreached { target: f64, n_max: usize, best: f64 },
    #[error("ill-conditioned system: condition number {0:e}")]
    IllConditioned(f64),
    #[error("orientation not normalized: <P0, Q0> = {0} <= 0")]
    OrientationNotNormalized(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Mobius(#[from] MobiusError),
    #[error(transparent)]
    Functional(#[from] crate::functionals::FunctionalError),
}

/// Resamples the planar curve `f(u)`, `u ∈ [u0, u1]`, so that consecutive points
/// are about `spacing(x, z)` apart. Both end points are included.
pub(crate) fn resample_curve(
    f: &dyn Fn(f64) -> (f64, f64),
    u0: f64,
    u1: f64,
    spacing: &dyn Fn(f64, f64) -> f64,
) -> Vec<(f64, f64)> {
    const FINE: usize = 4096;
    let us: Vec<f64> = (0..=FINE).map(|i| u0 + (u1 - u0) * i as f64 / FINE as f64).collect();
    let ps: Vec<(f64, f64)> = us.iter().map(|&u| f(u)).collect();
    let mut cum = vec![0.0; FINE + 1];
    for i in 0..FINE {
        let (a, b) = (ps[i], ps[i + 1]);
        let ds = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let h = 0.5 * (spacing(a.0, a.1) + spacing(b.0, b.1));
        cum[i + 1] = cum[i] + ds / h;
    }
    let count = (cum[FINE].ceil() as usize).max(1);
    let mut out = Vec::with_capacity(count + 1);
    out.push(ps[0]);
    for j in 1..count {
        let target = cum[FINE] * j as f64 / count as f64;
        let i = cum.partition_point(|&c| c < target).clamp(1, FINE);
        let frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
        out.push(f(us[i - 1] + frac * (us[i] - us[i - 1])));
    }
    out.push(ps[FINE]);
    out
}

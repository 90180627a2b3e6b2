//! The graph region of the connected sum: the inverted surface `p°_α + φ°_α`
//! near the origin, the rescaled host `q_{1/β} + ψ_{1/β}` outside the unit
//! circle, cutoff strips in between and the clamped biharmonic interpolation
//! on `γ < r < 1`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use serde::Serialize;

use super::biharmonic::{biharmonic_annulus, AnnulusBoundaryData, BiharmonicAnnulusSolution};
use super::jet::Jet;
use super::ConstructionError;

/// A graph function given by its jet.
pub type GraphFn<'a> = &'a (dyn Fn(Vector2<f64>) -> Jet + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectedSumParams {
    /// Second fundamental form of the surface that gets inverted.
    pub p: Matrix2<f64>,
    /// Second fundamental form of the host surface.
    pub q: Matrix2<f64>,
    pub p0: Matrix2<f64>,
    pub q0: Matrix2<f64>,
    pub alpha: f64,
    /// `β / α`.
    pub t_ratio: f64,
    pub gamma: f64,
    /// `½(Q₁₁ + Q₂₂)`.
    pub e: f64,
    /// Radius beyond which the inverted surface is a graph.
    pub r_inf: f64,
    /// Radius of the host graph disk.
    pub rho: f64,
}

fn trace_free(m: &Matrix2<f64>) -> Matrix2<f64> {
    m - Matrix2::identity() * (0.5 * m.trace())
}

impl ConnectedSumParams {
    pub fn new(p: Matrix2<f64>, q: Matrix2<f64>, alpha: f64, t_ratio: f64, gamma: f64) -> Self {
        Self {
            p,
            q,
            p0: trace_free(&p),
            q0: trace_free(&q),
            alpha,
            t_ratio,
            gamma,
            e: 0.5 * (q[(0, 0)] + q[(1, 1)]),
            r_inf: 1.0,
            rho: 1.0,
        }
    }

    pub fn beta(&self) -> f64 {
        self.t_ratio * self.alpha
    }

    /// Frobenius product `⟨P°, Q°⟩`.
    pub fn frobenius(&self) -> f64 {
        self.p0.component_mul(&self.q0).sum()
    }

    pub fn validate(&self) -> Result<(), ConstructionError> {
        let fin = [self.alpha, self.t_ratio, self.gamma, self.e, self.r_inf, self.rho];
        if fin.iter().any(|x| !x.is_finite()) || self.p.iter().chain(self.q.iter()).any(|x| !x.is_finite()) {
            return Err(ConstructionError::Parameter("non-finite connected-sum parameter".into()));
        }
        if (self.p - self.p.transpose()).amax() > 0.0 || (self.q - self.q.transpose()).amax() > 0.0 {
            return Err(ConstructionError::Parameter("P and Q must be symmetric".into()));
        }
        if (self.p0 - trace_free(&self.p)).amax() > 1e-14 || (self.q0 - trace_free(&self.q)).amax() > 1e-14 {
            return Err(ConstructionError::Parameter("stored trace-free parts are stale".into()));
        }
        if (self.e - 0.5 * (self.q[(0, 0)] + self.q[(1, 1)])).abs() > 1e-14 {
            return Err(ConstructionError::Parameter(format!("e = {} does not match ½ tr Q", self.e)));
        }
        let ip = self.frobenius();
        if ip <= 0.0 {
            return Err(ConstructionError::OrientationNotNormalized(ip));
        }
        let (a, g) = (self.alpha, self.gamma);
        if !(a > 0.0 && a < g && g < 1.0 && a / g <= 0.1) {
            return Err(ConstructionError::Parameter(format!("need 0 < α < γ < 1 and α/γ ≤ 0.1, got α = {a}, γ = {g}")));
        }
        if self.t_ratio <= 0.0 || self.r_inf <= 0.0 || self.rho <= 0.0 {
            return Err(ConstructionError::Parameter("t, R and ρ must be positive".into()));
        }
        if g - a.sqrt() <= a * self.r_inf {
            return Err(ConstructionError::Parameter(format!("inner strip reaches αR: γ − √α = {} ≤ {}", g - a.sqrt(), a * self.r_inf)));
        }
        if 1.0 + a.sqrt() >= self.rho / self.beta() {
            return Err(ConstructionError::Parameter(format!("outer strip exceeds ρ/β = {}", self.rho / self.beta())));
        }
        Ok(())
    }
}

/// Quintic cutoff: 0 for `s ≤ √α/4`, 1 for `s ≥ 3√α/4`; returns `[η, η', η'']`.
pub fn cutoff(alpha: f64, s: f64) -> [f64; 3] {
    let (a, b) = (0.25 * alpha.sqrt(), 0.75 * alpha.sqrt());
    if s <= a {
        return [0.0, 0.0, 0.0];
    }
    if s >= b {
        return [1.0, 0.0, 0.0];
    }
    let w = b - a;
    let x = (s - a) / w;
    [
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x),
        30.0 * x * x * (1.0 - x) * (1.0 - x) / w,
        60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (w * w),
    ]
}

/// Jet of `λ f(z/λ)` from the jet of `f` at `z/λ`.
fn rescaled(f: GraphFn<'_>, lambda: f64, z: Vector2<f64>) -> Jet {
    let j = f(z / lambda);
    Jet { value: lambda * j.value, grad: j.grad, hess: j.hess / lambda }
}

/// `ψ(z) = c₀x³ + c₁x²y + c₂xy² + c₃y³ + d|z|⁴`.
pub fn cubic_error(c: [f64; 4], d: f64) -> impl Fn(Vector2<f64>) -> Jet + Sync {
    move |z: Vector2<f64>| {
        let (x, y) = (z.x, z.y);
        let r2 = x * x + y * y;
        Jet {
            value: c[0] * x * x * x + c[1] * x * x * y + c[2] * x * y * y + c[3] * y * y * y + d * r2 * r2,
            grad: Vector2::new(
                3.0 * c[0] * x * x + 2.0 * c[1] * x * y + c[2] * y * y + 4.0 * d * r2 * x,
                c[1] * x * x + 2.0 * c[2] * x * y + 3.0 * c[3] * y * y + 4.0 * d * r2 * y,
            ),
            hess: Matrix2::new(
                6.0 * c[0] * x + 2.0 * c[1] * y + d * (12.0 * x * x + 4.0 * y * y),
                2.0 * c[1] * x + 2.0 * c[2] * y + 8.0 * d * x * y,
                2.0 * c[1] * x + 2.0 * c[2] * y + 8.0 * d * x * y,
                2.0 * c[2] * x + 6.0 * c[3] * y + d * (4.0 * x * x + 12.0 * y * y),
            ),
        }
    }
}

/// `φ°(ζ) = c₀/|ζ| + (c₁ζ₁ + c₂ζ₂)/|ζ|²`.
pub fn inverse_error(c: [f64; 3]) -> impl Fn(Vector2<f64>) -> Jet + Sync {
    move |z: Vector2<f64>| {
        let r = z.norm();
        let lin = Jet { value: c[1] * z.x + c[2] * z.y, grad: Vector2::new(c[1], c[2]), hess: Matrix2::zeros() };
        Jet::radial(z, [1.0 / r, -1.0 / (r * r), 2.0 / r.powi(3)]).scale(c[0])
            + lin * Jet::radial(z, [1.0 / (r * r), -2.0 / r.powi(3), 6.0 / r.powi(4)])
    }
}

fn sample_constant(f: GraphFn<'_>, radii: impl Iterator<Item = f64>, weights: impl Fn(f64) -> [f64; 3]) -> Vec<f64> {
    radii
        .map(|r| {
            let w = weights(r);
            (0..16)
                .map(|i| {
                    let th = 2.0 * PI * (i as f64 + 0.37) / 16.0;
                    let j = f(Vector2::new(r * th.cos(), r * th.sin()));
                    w[0] * j.value.abs() + w[1] * j.grad.norm() + w[2] * j.hess.norm()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn order_check(name: &str, c: &[f64]) -> Result<f64, ConstructionError> {
    let max = c.iter().copied().fold(0.0, f64::max);
    let head = c[0].max(c[1]);
    let tail = c[c.len() - 1].max(c[c.len() - 2]);
    if !max.is_finite() || tail > 2.0 * head + 1e-12 {
        return Err(ConstructionError::Parameter(format!("{name} violates the error-term bound (sampled constants {c:?})")));
    }
    Ok(max)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let j = DMatrix::from_fn(n, n, |i, k| {
            if i + 1 == k || k + 1 == i {
                let m = i.max(k) as f64;
                m / (4.0 * m * m - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    })
}

const GL_POINTS: usize = 16;
const ANGLES: usize = 128;

/// `∫∫ f` over `a < |z| < b` with panels of radius ratio at most 1.5 between `breaks`.
fn integrate_annulus(breaks: &[f64], f: &(dyn Fn(Vector2<f64>) -> f64 + Sync)) -> f64 {
    let (x, w) = gauss_legendre();
    let mut panels = Vec::new();
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        if a <= 0.0 {
            panels.push((a, b));
            continue;
        }
        let n = ((b / a).ln() / 1.5f64.ln()).ceil().max(1.0) as usize;
        let ratio = (b / a).powf(1.0 / n as f64);
        for k in 0..n {
            panels.push((a * ratio.powi(k as i32), if k + 1 == n { b } else { a * ratio.powi(k as i32 + 1) }));
        }
    }
    use rayon::prelude::*;
    panels
        .par_iter()
        .map(|&(a, b)| {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(w) {
                let r = mid + half * xi;
                let mut ring = 0.0;
                for k in 0..ANGLES {
                    let th = 2.0 * PI * k as f64 / ANGLES as f64;
                    ring += f(Vector2::new(r * th.cos(), r * th.sin()));
                }
                s += wi * half * r * ring * 2.0 * PI / ANGLES as f64;
            }
            s
        })
        .sum()
}

/// The assembled graph function `w` on `αR < r < ρ/β`.
pub struct GluedGraph<'a> {
    pub params: ConnectedSumParams,
    pub solution: BiharmonicAnnulusSolution,
    phi: GraphFn<'a>,
    psi: GraphFn<'a>,
}

impl GluedGraph<'_> {
    /// `p°_α(z) = (α/2) P°(ẑ, ẑ)`.
    pub fn p_alpha(&self, z: Vector2<f64>) -> Jet {
        let r = z.norm();
        (Jet::quadratic(z, &self.params.p0) * Jet::radial(z, [1.0 / (r * r), -2.0 / r.powi(3), 6.0 / r.powi(4)]))
            .scale(self.params.alpha)
    }

    /// `q_{1/β}(z) = (β/2) Q(z, z)`.
    pub fn q_beta(&self, z: Vector2<f64>) -> Jet {
        Jet::quadratic(z, &self.params.q).scale(self.params.beta())
    }

    pub fn phi_alpha(&self, z: Vector2<f64>) -> Jet {
        rescaled(self.phi, self.params.alpha, z)
    }

    pub fn psi_beta(&self, z: Vector2<f64>) -> Jet {
        rescaled(self.psi, 1.0 / self.params.beta(), z)
    }

    /// Rescaled inverted surface `u°_α = p°_α + φ°_α` without cutoff.
    pub fn u_alpha(&self, z: Vector2<f64>) -> Jet {
        self.p_alpha(z) + self.phi_alpha(z)
    }

    /// Rescaled host `v_{1/β} = q_{1/β} + ψ_{1/β}` without cutoff.
    pub fn v_beta(&self, z: Vector2<f64>) -> Jet {
        self.q_beta(z) + self.psi_beta(z)
    }

    pub fn jet(&self, z: Vector2<f64>) -> Jet {
        let r = z.norm();
        let (a, g) = (self.params.alpha, self.params.gamma);
        if r < g {
            let c = cutoff(a, g - r);
            self.p_alpha(z) + Jet::radial(z, [c[0], -c[1], c[2]]) * self.phi_alpha(z)
        } else if r <= 1.0 {
            self.solution.jet(z)
        } else {
            let c = cutoff(a, r - 1.0);
            self.q_beta(z) + Jet::radial(z, c) * self.psi_beta(z)
        }
    }

    pub fn inner_radius(&self) -> f64 {
        self.params.alpha * self.params.r_inf
    }

    pub fn outer_radius(&self) -> f64 {
        self.params.rho / self.params.beta()
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (s, g) = (self.params.alpha.sqrt(), self.params.gamma);
        let mut b: Vec<f64> = [g - s, g - 0.75 * s, g - 0.25 * s, g, 1.0, 1.0 + 0.25 * s, 1.0 + 0.75 * s, 1.0 + s]
            .into_iter()
            .filter(|&x| x > lo && x < hi)
            .collect();
        b.insert(0, lo);
        b.push(hi);
        b
    }

    /// Samples `w` on a polar grid over `αR < r < ρ/β` as rows `[r, θ, w]`.
    pub fn grid(&self, nr: usize, ntheta: usize) -> Vec<[f64; 3]> {
        let (a, b) = (self.inner_radius(), self.outer_radius());
        let mut out = Vec::with_capacity(nr * ntheta);
        for i in 0..nr {
            let r = a * (b / a).powf((i as f64 + 0.5) / nr as f64);
            for j in 0..ntheta {
                let th = 2.0 * PI * j as f64 / ntheta as f64;
                out.push([r, th, self.jet(Vector2::new(r * th.cos(), r * th.sin())).value]);
            }
        }
        out
    }

    pub fn grid_csv(&self, nr: usize, ntheta: usize) -> String {
        use crate::functionals::fmt_sig;
        let mut s = String::from("r,theta,w\n");
        for [r, th, w] in self.grid(nr, ntheta) {
            s.push_str(&format!("{},{},{}\n", fmt_sig(r), fmt_sig(th), fmt_sig(w)));
        }
        s
    }
}

/// Integrals and checks over the glued graph region.
#[derive(Debug, Clone, Serialize)]
pub struct GluedRegionReport {
    /// `∫_{D_{1+√α}∖D₁} Δw`.
    pub strip_outer: f64,
    /// `∫_{D_γ∖D_{γ−√α}} Δw`.
    pub strip_inner: f64,
    /// `∫_{D₁∖D_γ} Δw` by quadrature.
    pub biharmonic_integral: f64,
    /// `C₂π(1 − γ²) − 2C₄γ²π log γ`.
    pub biharmonic_closed_form: f64,
    /// `∫_{D_{1+√α}} Δv_{1/β}`.
    pub removed_disk: f64,
    /// `2βπe`.
    pub two_beta_pi_e: f64,
    /// `∫ H dA` of the graph over `αR < r < ρ/β`.
    pub int_h: f64,
    /// `¼ ∫ H² dA` of the graph over `αR < r < ρ/β`.
    pub w: f64,
    pub area: f64,
    /// Largest `|H√det G − Δw| / (|Dw||D²w|)` over grid points with `|Dw| ≤ 1`.
    pub mean_curvature_ratio: f64,
    /// Sampled constants of the error-term bounds for `φ°` and `ψ`.
    pub phi_constant: f64,
    pub psi_constant: f64,
}

/// Assembles `w` for the given error graphs and evaluates the region integrals.
pub fn glued_graph_region<'a>(
    params: ConnectedSumParams,
    phi_err: GraphFn<'a>,
    psi_err: GraphFn<'a>,
) -> Result<(GluedGraph<'a>, GluedRegionReport), ConstructionError> {
    params.validate()?;
    let phi_c = sample_constant(phi_err, (0..12).map(|k| params.r_inf * 2f64.powi(k)), |r| [r, r * r, r * r * r]);
    let psi_c = sample_constant(psi_err, (0..12).map(|k| params.rho * 2f64.powi(-k)), |r| {
        [r.powi(-3), r.powi(-2), 1.0 / r]
    });
    let phi_constant = order_check("φ°", &phi_c)?;
    let psi_constant = order_check("ψ", &psi_c)?;

    let probe = GluedGraph {
        params,
        solution: biharmonic_annulus(params.gamma, &AnnulusBoundaryData::default())?,
        phi: phi_err,
        psi: psi_err,
    };
    let inner = AnnulusBoundaryData::from_function(params.gamma, 64, |z| probe.p_alpha(z));
    let outer = AnnulusBoundaryData::from_function(params.gamma, 64, |z| probe.q_beta(z));
    let pick = |i: [f64; 4], o: [f64; 4]| [i[0], i[1], o[2], o[3]];
    let bc = AnnulusBoundaryData {
        radial: pick(inner.radial, outer.radial),
        cos2: pick(inner.cos2, outer.cos2),
        sin2: pick(inner.sin2, outer.sin2),
    };
    let graph = GluedGraph { solution: biharmonic_annulus(params.gamma, &bc)?, ..probe };

    let (s, g) = (params.alpha.sqrt(), params.gamma);
    let lap = |z: Vector2<f64>| graph.jet(z).laplacian();
    let strip_outer = integrate_annulus(&graph.breaks(1.0, 1.0 + s), &lap);
    let strip_inner = integrate_annulus(&graph.breaks(g - s, g), &lap);
    let biharmonic_integral = integrate_annulus(&[g, 1.0], &lap);
    let removed_disk = integrate_annulus(&[0.0, 1.0, 1.0 + s], &|z| graph.v_beta(z).laplacian());

    let all = graph.breaks(graph.inner_radius(), graph.outer_radius());
    let int_h = integrate_annulus(&all, &|z| {
        let j = graph.jet(z);
        j.graph_mean_curvature() * j.graph_area_element()
    });
    let w = integrate_annulus(&all, &|z| {
        let j = graph.jet(z);
        0.25 * j.graph_mean_curvature().powi(2) * j.graph_area_element()
    });
    let area = integrate_annulus(&all, &|z| graph.jet(z).graph_area_element());
    let mut mean_curvature_ratio: f64 = 0.0;
    for [r, th, _] in graph.grid(200, 64) {
        let j = graph.jet(Vector2::new(r * th.cos(), r * th.sin()));
        let denom = j.grad.norm() * j.hess.norm();
        if j.grad.norm() <= 1.0 && denom > 1e-300 {
            let num = (j.graph_mean_curvature() * j.graph_area_element() - j.laplacian()).abs();
            mean_curvature_ratio = mean_curvature_ratio.max(num / denom);
        }
    }
    let report = GluedRegionReport {
        strip_outer,
        strip_inner,
        biharmonic_integral,
        biharmonic_closed_form: graph.solution.laplacian_integral(),
        removed_disk,
        two_beta_pi_e: 2.0 * params.beta() * PI * params.e,
        int_h,
        w,
        area,
        mean_curvature_ratio,
        phi_constant,
        psi_constant,
    };
    Ok((graph, report))
}

/// Leading-order predictions for the connected sum next to the graph-level evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectedSumReport {
    /// `|P°|² − t⟨P°, Q°⟩`.
    pub leading_coefficient: f64,
    /// `πα²(|P°|² − t⟨P°, Q°⟩)`.
    pub predicted_delta_w: f64,
    /// `αβ A(f₂)^{−1/2} ∫H` of the inverted surface.
    pub predicted_delta_t: f64,
    /// `W(w) − W(u°_α) − W(v_{1/β})` over the modified region.
    pub graph_delta_w: f64,
    pub energy_decreases: bool,
}

/// Compares the predicted energy and ratio changes with the graph-level
/// energy difference of the modified region.
pub fn connected_sum_report(
    params: ConnectedSumParams,
    phi_err: GraphFn<'_>,
    psi_err: GraphFn<'_>,
    inverted_surface_int_h: f64,
    host_area: f64,
) -> Result<ConnectedSumReport, ConstructionError> {
    if !(host_area > 0.0 && host_area.is_finite() && inverted_surface_int_h.is_finite()) {
        return Err(ConstructionError::Parameter("host area must be positive and ∫H finite".into()));
    }
    let (graph, _) = glued_graph_region(params, phi_err, psi_err)?;
    let density = |j: Jet| 0.25 * j.graph_mean_curvature().powi(2) * j.graph_area_element();
    let s = params.alpha.sqrt();
    let (lo, hi) = (params.gamma - s, 1.0 + s);
    let glued = integrate_annulus(&graph.breaks(lo, hi), &|z| density(graph.jet(z)));
    let tail = hi.max(1.0) * 1e6;
    let inverted = integrate_annulus(&graph.breaks(lo, tail), &|z| density(graph.u_alpha(z)));
    let host = integrate_annulus(&[0.0, lo, 1.0, hi], &|z| density(graph.v_beta(z)));
    let leading = params.p0.norm_squared() - params.t_ratio * params.frobenius();
    let predicted_delta_w = PI * params.alpha.powi(2) * leading;
    let graph_delta_w = glued - inverted - host;
    Ok(ConnectedSumReport {
        leading_coefficient: leading,
        predicted_delta_w,
        predicted_delta_t: params.alpha * params.beta() / host_area.sqrt() * inverted_surface_int_h,
        graph_delta_w,
        energy_decreases: graph_delta_w < 0.0,
    })
}

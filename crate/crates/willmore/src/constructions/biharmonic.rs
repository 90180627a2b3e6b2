//! Closed-form biharmonic functions on the annulus `γ < r < 1` with clamped
//! boundary data in the radial, `cos 2θ` and `sin 2θ` Fourier modes.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use super::jet::Jet;
use super::ConstructionError;

/// Largest accepted condition number of a column-equilibrated mode system.
pub const MAX_CONDITION: f64 = 1e14;

/// Clamped data per mode, each as `[w(γ), ∂ᵣw(γ), w(1), ∂ᵣw(1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnulusBoundaryData {
    pub radial: [f64; 4],
    pub cos2: [f64; 4],
    pub sin2: [f64; 4],
}

impl AnnulusBoundaryData {
    /// Projects the traces of `f` on both circles onto the three modes by
    /// trapezoidal quadrature with `samples` angles.
    pub fn from_function(gamma: f64, samples: usize, f: impl Fn(Vector2<f64>) -> Jet) -> Self {
        let mut out = Self::default();
        for (slot, r) in [(0usize, gamma), (2, 1.0)] {
            let (mut m0, mut mc, mut ms) = ([0.0; 2], [0.0; 2], [0.0; 2]);
            for i in 0..samples {
                let th = 2.0 * PI * i as f64 / samples as f64;
                let u = Vector2::new(th.cos(), th.sin());
                let j = f(u * r);
                let d = [j.value, j.grad.dot(&u)];
                for k in 0..2 {
                    m0[k] += d[k];
                    mc[k] += d[k] * (2.0 * th).cos();
                    ms[k] += d[k] * (2.0 * th).sin();
                }
            }
            let n = samples as f64;
            for k in 0..2 {
                out.radial[slot + k] = m0[k] / n;
                out.cos2[slot + k] = 2.0 * mc[k] / n;
                out.sin2[slot + k] = 2.0 * ms[k] / n;
            }
        }
        out
    }
}

/// `w(r, θ) = k(r) + g(r) cos 2θ + h(r) sin 2θ` with
/// `k ∈ span{1, r²/4, log r, (r²/4)(2 log r − 1)}` and
/// `g, h ∈ span{r², r⁴, r⁻², 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiharmonicAnnulusSolution {
    pub gamma: f64,
    pub radial: [f64; 4],
    pub cos2: [f64; 4],
    pub sin2: [f64; 4],
}

#[derive(Clone, Copy)]
enum Mode {
    Radial,
    Two,
}

/// Derivatives of orders 0..=4 of the four basis functions of a mode.
fn basis(mode: Mode, r: f64) -> [[f64; 5]; 4] {
    match mode {
        Mode::Radial => {
            let l = r.ln();
            [
                [1.0, 0.0, 0.0, 0.0, 0.0],
                [r * r / 4.0, r / 2.0, 0.5, 0.0, 0.0],
                [l, 1.0 / r, -1.0 / (r * r), 2.0 / r.powi(3), -6.0 / r.powi(4)],
                [r * r * (2.0 * l - 1.0) / 4.0, r * l, l + 1.0, 1.0 / r, -1.0 / (r * r)],
            ]
        }
        Mode::Two => [power(r, 2.0), power(r, 4.0), power(r, -2.0), power(r, 0.0)],
    }
}

fn power(r: f64, p: f64) -> [f64; 5] {
    let mut d = [0.0; 5];
    let mut c = 1.0;
    for (k, slot) in d.iter_mut().enumerate() {
        *slot = c * r.powf(p - k as f64);
        c *= p - k as f64;
    }
    d
}

fn mode_system(mode: Mode, gamma: f64) -> Matrix4<f64> {
    let (bg, b1) = (basis(mode, gamma), basis(mode, 1.0));
    Matrix4::from_fn(|i, j| match i {
        0 => bg[j][0],
        1 => bg[j][1],
        2 => b1[j][0],
        _ => b1[j][1],
    })
}

fn solve_mode(mode: Mode, gamma: f64, data: [f64; 4], order: [usize; 4]) -> Result<[f64; 4], ConstructionError> {
    let m = mode_system(mode, gamma);
    let scale = Vector4::from_fn(|j, _| 1.0 / m.column(j).amax());
    let scaled = Matrix4::from_fn(|i, j| m[(order[i], j)] * scale[j]);
    let sv = scaled.singular_values();
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(ConstructionError::IllConditioned(cond));
    }
    let rhs = Vector4::from_fn(|i, _| data[order[i]]);
    let y = scaled
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(ConstructionError::IllConditioned(f64::INFINITY))?;
    Ok([y[0] * scale[0], y[1] * scale[1], y[2] * scale[2], y[3] * scale[3]])
}

fn solve_with_order(
    gamma: f64,
    bc: &AnnulusBoundaryData,
    order: [usize; 4],
) -> Result<BiharmonicAnnulusSolution, ConstructionError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ConstructionError::Parameter(format!("inner radius {gamma} outside (0, 1)")));
    }
    let all = bc.radial.iter().chain(&bc.cos2).chain(&bc.sin2);
    if all.clone().any(|x| !x.is_finite()) {
        return Err(ConstructionError::Parameter("non-finite boundary data".into()));
    }
    Ok(BiharmonicAnnulusSolution {
        gamma,
        radial: solve_mode(Mode::Radial, gamma, bc.radial, order)?,
        cos2: solve_mode(Mode::Two, gamma, bc.cos2, order)?,
        sin2: solve_mode(Mode::Two, gamma, bc.sin2, order)?,
    })
}

/// Solves `Δ²w = 0` on `γ < r < 1` with the given clamped data.
pub fn biharmonic_annulus(gamma: f64, bc: &AnnulusBoundaryData) -> Result<BiharmonicAnnulusSolution, ConstructionError> {
    solve_with_order(gamma, bc, [0, 1, 2, 3])
}

fn combine(mode: Mode, c: &[f64; 4], r: f64) -> [f64; 5] {
    let b = basis(mode, r);
    let mut out = [0.0; 5];
    for j in 0..4 {
        for k in 0..5 {
            out[k] += c[j] * b[j][k];
        }
    }
    out
}

/// `Lₙ Lₙ f` with `Lₙ f = f'' + f'/r − n² f/r²`, from the derivatives of `f`.
fn bilaplacian_mode(d: [f64; 5], n: f64, r: f64) -> f64 {
    let a = 2.0 * n * n + 1.0;
    d[4] + 2.0 * d[3] / r - a * d[2] / (r * r) + a * d[1] / r.powi(3) + (n.powi(4) - 4.0 * n * n) * d[0] / r.powi(4)
}

impl BiharmonicAnnulusSolution {
    /// Radial derivatives `[f, f', f'', f''', f'''']` of `k`, `g` and `h`.
    pub fn mode_derivatives(&self, r: f64) -> [[f64; 5]; 3] {
        [
            combine(Mode::Radial, &self.radial, r),
            combine(Mode::Two, &self.cos2, r),
            combine(Mode::Two, &self.sin2, r),
        ]
    }

    pub fn value(&self, r: f64, theta: f64) -> f64 {
        let [k, g, h] = self.mode_derivatives(r);
        k[0] + g[0] * (2.0 * theta).cos() + h[0] * (2.0 * theta).sin()
    }

    pub fn radial_derivative(&self, r: f64, theta: f64) -> f64 {
        let [k, g, h] = self.mode_derivatives(r);
        k[1] + g[1] * (2.0 * theta).cos() + h[1] * (2.0 * theta).sin()
    }

    /// `Δ²w` evaluated from the closed-form derivatives.
    pub fn bilaplacian(&self, r: f64, theta: f64) -> f64 {
        let [k, g, h] = self.mode_derivatives(r);
        bilaplacian_mode(k, 0.0, r)
            + bilaplacian_mode(g, 2.0, r) * (2.0 * theta).cos()
            + bilaplacian_mode(h, 2.0, r) * (2.0 * theta).sin()
    }

    /// Cartesian jet of `w` at `z ≠ 0`.
    pub fn jet(&self, z: Vector2<f64>) -> Jet {
        let r = z.norm();
        let [k, g, h] = self.mode_derivatives(r);
        let over_r2 = |f: [f64; 5]| {
            let r2 = r * r;
            [f[0] / r2, f[1] / r2 - 2.0 * f[0] / (r2 * r), f[2] / r2 - 4.0 * f[1] / (r2 * r) + 6.0 * f[0] / (r2 * r2)]
        };
        Jet::radial(z, [k[0], k[1], k[2]])
            + Jet::radial(z, over_r2(g)) * Jet::cos2_poly(z)
            + Jet::radial(z, over_r2(h)) * Jet::sin2_poly(z)
    }

    /// `∫_{D₁∖D_γ} Δw = C₂π(1 − γ²) − 2C₄γ²π log γ`.
    pub fn laplacian_integral(&self) -> f64 {
        let g = self.gamma;
        self.radial[1] * PI * (1.0 - g * g) - 2.0 * self.radial[3] * g * g * PI * g.ln()
    }

    /// Largest deviation of the traces from the prescribed mode data.
    pub fn boundary_mismatch(&self, bc: &AnnulusBoundaryData) -> f64 {
        let mut worst: f64 = 0.0;
        for (slot, r) in [(0usize, self.gamma), (2, 1.0)] {
            let d = self.mode_derivatives(r);
            for (m, data) in [bc.radial, bc.cos2, bc.sin2].iter().enumerate() {
                worst = worst.max((d[m][0] - data[slot]).abs()).max((d[m][1] - data[slot + 1]).abs());
            }
        }
        worst
    }

    /// Samples `w` on an `nr × ntheta` polar grid as CSV rows `r,theta,w`.
    pub fn grid_csv(&self, nr: usize, ntheta: usize) -> String {
        let mut s = String::from("r,theta,w\n");
        for i in 0..nr {
            let r = self.gamma + (1.0 - self.gamma) * i as f64 / (nr.max(2) - 1) as f64;
            for j in 0..ntheta {
                let th = 2.0 * PI * j as f64 / ntheta as f64;
                s.push_str(&format!(
                    "{},{},{}\n",
                    crate::functionals::fmt_sig(r),
                    crate::functionals::fmt_sig(th),
                    crate::functionals::fmt_sig(self.value(r, th))
                ));
            }
        }
        s
    }
}

//! Axisymmetric spheres given by arc-length profiles `(γ₁, γ₂)` with turning
//! angle θ, their quadrature functionals and the two counterexample families.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Absolute tolerance for axis endpoints and unit-speed checks.
pub const PROFILE_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum AxisymError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile is not unit speed: {0}")]
    Parametrization(String),
    #[error("invalid parameters: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    Construction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub s: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub samples: Vec<ProfileSample>,
    pub total_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisymReport {
    #[serde(rename = "intH")]
    pub int_h: f64,
    #[serde(rename = "A")]
    pub area: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub min_theta: f64,
    pub max_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralIdentities {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub int_cos: f64,
    pub int_sin: f64,
    pub height_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowVerdict {
    Holds { int_h: f64, bound: f64, satisfied: bool },
    Violated { min_theta: f64, max_theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SixPiVerdict {
    NotApplicable { int_h: f64 },
    Applies { int_h: f64, w: f64, variation_bound: f64, satisfied: bool },
}

/// `∫₀ʰ (cos, sin)(a + b u) du`, stable for small `b h`.
pub fn chord(a: f64, b: f64, h: f64) -> (f64, f64) {
    let half = 0.5 * b * h;
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    let mid = a + half;
    (h * sinc * mid.cos(), h * sinc * mid.sin())
}

impl ProfileCurve {
    /// Builds a profile from θ samples, integrating positions exactly for
    /// piecewise-linear θ starting at `(x0, z0)`.
    pub fn from_theta(s: &[f64], theta: &[f64], x0: f64, z0: f64) -> Self {
        let mut samples = Vec::with_capacity(s.len());
        let (mut x, mut z) = (x0, z0);
        for k in 0..s.len() {
            if k > 0 {
                let h = s[k] - s[k - 1];
                let b = if h > 0.0 { (theta[k] - theta[k - 1]) / h } else { 0.0 };
                let (dx, dz) = chord(theta[k - 1], b, h);
                x += dx;
                z += dz;
            }
            samples.push(ProfileSample { s: s[k], gamma1: x, gamma2: z, theta: theta[k] });
        }
        let total_length = s.last().copied().unwrap_or(0.0) - s.first().copied().unwrap_or(0.0);
        Self { samples, total_length }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest |Δθ/Δs| over the sample intervals.
    pub fn lipschitz(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| ((w[1].theta - w[0].theta) / (w[1].s - w[0].s)).abs())
            .fold(0.0, f64::max)
    }

    pub fn theta_range(&self) -> (f64, f64) {
        self.samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.theta), hi.max(p.theta))
        })
    }

    pub fn validate(&self) -> Result<(), AxisymError> {
        let s = &self.samples;
        if s.len() < 3 {
            return Err(AxisymError::InvalidProfile("fewer than 3 samples".into()));
        }
        let (first, last) = (s[0], s[s.len() - 1]);
        if first.gamma1.abs() > PROFILE_TOL || last.gamma1.abs() > PROFILE_TOL {
            return Err(AxisymError::InvalidProfile(format!(
                "endpoints off axis: gamma1(0) = {:e}, gamma1(T) = {:e}",
                first.gamma1, last.gamma1
            )));
        }
        if first.theta.abs() > 1e-9 {
            return Err(AxisymError::InvalidProfile(format!("theta(0) = {} != 0", first.theta)));
        }
        if first.theta.sin().abs() > 1e-9 || last.theta.sin().abs() > 1e-9 {
            return Err(AxisymError::InvalidProfile("profile is not horizontal at the poles".into()));
        }
        for (k, p) in s.iter().enumerate().take(s.len() - 1).skip(1) {
            if !(p.gamma1 > 0.0) {
                return Err(AxisymError::InvalidProfile(format!("gamma1 = {} <= 0 at sample {k}", p.gamma1)));
            }
        }
        for (k, w) in s.windows(2).enumerate() {
            let h = w[1].s - w[0].s;
            if !(h > 0.0) {
                return Err(AxisymError::Parametrization(format!("arc length not increasing at {k}")));
            }
            let (dx, dz) = chord(w[0].theta, (w[1].theta - w[0].theta) / h, h);
            let err = (w[1].gamma1 - w[0].gamma1 - dx).abs().max((w[1].gamma2 - w[0].gamma2 - dz).abs());
            if err > PROFILE_TOL {
                return Err(AxisymError::Parametrization(format!("interval {k} chord mismatch {err:e}")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        use crate::functionals::fmt_sig;
        let mut out = String::from("s,gamma1,gamma2,theta\n");
        for p in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_sig(p.s),
                fmt_sig(p.gamma1),
                fmt_sig(p.gamma2),
                fmt_sig(p.theta)
            ));
        }
        out
    }

    /// Parses `s,gamma1,gamma2,theta` rows; `#` lines and the header are skipped.
    pub fn from_csv(text: &str) -> Result<Self, AxisymError> {
        let mut samples = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('s') {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| AxisymError::InvalidProfile(format!("line {}: {e}", ln + 1)))?;
            if vals.len() != 4 {
                return Err(AxisymError::InvalidProfile(format!("line {}: expected 4 columns", ln + 1)));
            }
            samples.push(ProfileSample { s: vals[0], gamma1: vals[1], gamma2: vals[2], theta: vals[3] });
        }
        let total_length = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => b.s - a.s,
            _ => 0.0,
        };
        Ok(Self { samples, total_length })
    }
}

pub fn axisym_functionals(curve: &ProfileCurve) -> Result<AxisymReport, AxisymError> {
    curve.validate()?;
    Ok(functionals_unchecked(curve))
}

fn functionals_unchecked(curve: &ProfileCurve) -> AxisymReport {
    let s = &curve.samples;
    let n = s.len();
    let slope = |k: usize| (s[k + 1].theta - s[k].theta) / (s[k + 1].s - s[k].s);
    let kappa1 = |k: usize| {
        if k == 0 {
            slope(0)
        } else if k == n - 1 {
            slope(n - 2)
        } else {
            s[k].theta.sin() / s[k].gamma1
        }
    };
    let (mut int_h, mut area, mut w) = (0.0, 0.0, 0.0);
    for k in 0..n - 1 {
        let h = s[k + 1].s - s[k].s;
        let d = slope(k);
        let (p, q) = (s[k], s[k + 1]);
        int_h += 0.5 * h * ((p.theta.sin() + p.gamma1 * d) + (q.theta.sin() + q.gamma1 * d));
        area += 0.5 * h * (p.gamma1 + q.gamma1);
        let wp = (kappa1(k) + d).powi(2) * p.gamma1;
        let wq = (kappa1(k + 1) + d).powi(2) * q.gamma1;
        w += 0.5 * h * (wp + wq);
    }
    let (min_theta, max_theta) = curve.theta_range();
    AxisymReport { int_h: TAU * int_h, area: TAU * area, w: 0.5 * PI * w, min_theta, max_theta }
}

/// Both forms of the total mean curvature plus the closure integrals.
pub fn both_integral_identities(curve: &ProfileCurve) -> IntegralIdentities {
    let s = &curve.samples;
    let (mut lhs, mut rhs, mut ic, mut is) = (0.0, 0.0, 0.0, 0.0);
    for w in s.windows(2) {
        let h = w[1].s - w[0].s;
        let d = (w[1].theta - w[0].theta) / h;
        let (p, q) = (w[0], w[1]);
        let (tm, xm) = (0.5 * (p.theta + q.theta), p.gamma1 + chord(p.theta, d, 0.5 * h).0);
        let f = |t: f64, x: f64| t.sin() + x * d;
        let g = |t: f64| t.sin() - t.cos() * t;
        lhs += h / 6.0 * (f(p.theta, p.gamma1) + 4.0 * f(tm, xm) + f(q.theta, q.gamma1));
        rhs += h / 6.0 * (g(p.theta) + 4.0 * g(tm) + g(q.theta));
        let (c, sn) = chord(p.theta, d, h);
        ic += c;
        is += sn;
    }
    let height_gain = s.last().map_or(0.0, |l| l.gamma2) - s.first().map_or(0.0, |f| f.gamma2);
    IntegralIdentities {
        lhs: TAU * lhs,
        rhs: TAU * rhs,
        gap: TAU * (lhs - rhs).abs(),
        int_cos: ic,
        int_sin: is,
        height_gain,
    }
}

pub fn check_theta_window_theorem(curve: &ProfileCurve) -> Result<WindowVerdict, AxisymError> {
    let rep = axisym_functionals(curve)?;
    let tol = 1e-9;
    if rep.min_theta < -FRAC_PI_2 - tol || rep.max_theta > 1.5 * PI + tol {
        return Ok(WindowVerdict::Violated { min_theta: rep.min_theta, max_theta: rep.max_theta });
    }
    let bound = -1e-6 * rep.area.sqrt();
    Ok(WindowVerdict::Holds { int_h: rep.int_h, bound, satisfied: rep.int_h >= bound })
}

pub fn check_sixpi_bound(curve: &ProfileCurve) -> Result<SixPiVerdict, AxisymError> {
    let rep = axisym_functionals(curve)?;
    if rep.int_h > 0.0 {
        return Ok(SixPiVerdict::NotApplicable { int_h: rep.int_h });
    }
    let s = &curve.samples;
    let mut tv = 0.0;
    for w in s.windows(2) {
        let h = w[1].s - w[0].s;
        let d = ((w[1].theta - w[0].theta) / h).abs();
        tv += 0.5 * h * d * (w[0].theta.sin().abs() + w[1].theta.sin().abs());
    }
    let variation_bound = TAU + PI * tv;
    Ok(SixPiVerdict::Applies {
        int_h: rep.int_h,
        w: rep.w,
        variation_bound,
        satisfied: rep.w >= 6.0 * PI - 1e-3,
    })
}

/// A profile path made of straight lines and circular arcs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line { length: f64 },
    /// Positive `turn` is counter-clockwise.
    Arc { radius: f64, turn: f64 },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { length } => length,
            Segment::Arc { radius, turn } => radius * turn.abs(),
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            Segment::Line { .. } => 0.0,
            Segment::Arc { radius, turn } => turn.signum() / radius,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathBuilder {
    pub start: (f64, f64),
    pub theta0: f64,
    pub segments: Vec<Segment>,
}

impl PathBuilder {
    pub fn new(x0: f64, z0: f64, theta0: f64) -> Self {
        Self { start: (x0, z0), theta0, segments: Vec::new() }
    }

    pub fn line(&mut self, length: f64) -> &mut Self {
        if length > 0.0 {
            self.segments.push(Segment::Line { length });
        }
        self
    }

    pub fn arc(&mut self, radius: f64, turn: f64) -> &mut Self {
        if turn != 0.0 {
            self.segments.push(Segment::Arc { radius, turn });
        }
        self
    }

    /// Position and heading after all segments.
    pub fn end(&self) -> (f64, f64, f64) {
        let (mut x, mut z, mut th) = (self.start.0, self.start.1, self.theta0);
        for seg in &self.segments {
            let l = seg.length();
            let (dx, dz) = chord(th, seg.curvature(), l);
            x += dx;
            z += dz;
            th += seg.curvature() * l;
        }
        (x, z, th)
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    /// Samples every segment so that the local spacing follows `spacing(γ₁)`;
    /// segment junctions are always sample points.
    pub fn sample(&self, spacing: impl Fn(f64) -> f64) -> ProfileCurve {
        const FINE: usize = 256;
        let mut s_acc = vec![0.0];
        let mut th_acc = vec![self.theta0];
        let (mut x, mut th, mut s0) = (self.start.0, self.theta0, 0.0);
        for seg in &self.segments {
            let l = seg.length();
            let k = seg.curvature();
            let at = |u: f64| {
                let (dx, _) = chord(th, k, u);
                x + dx
            };
            let mut cum = vec![0.0; FINE + 1];
            for i in 0..FINE {
                let (u0, u1) = (l * i as f64 / FINE as f64, l * (i + 1) as f64 / FINE as f64);
                let h0 = spacing(at(u0).max(0.0));
                let h1 = spacing(at(u1).max(0.0));
                cum[i + 1] = cum[i] + 0.5 * (u1 - u0) * (1.0 / h0 + 1.0 / h1);
            }
            let count = (cum[FINE].ceil() as usize).max(1);
            for j in 1..=count {
                let target = cum[FINE] * j as f64 / count as f64;
                let u = if j == count {
                    l
                } else {
                    let i = cum.partition_point(|&c| c < target).clamp(1, FINE);
                    let frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
                    l * ((i - 1) as f64 + frac) / FINE as f64
                };
                s_acc.push(s0 + u);
                th_acc.push(th + k * u);
            }
            x += chord(th, k, l).0;
            th += k * l;
            s0 += l;
        }
        ProfileCurve::from_theta(&s_acc, &th_acc, self.start.0, self.start.1)
    }

    pub fn sample_uniform(&self, max_ds: f64) -> ProfileCurve {
        self.sample(|_| max_ds)
    }

    /// Spacing proportional to the local radius so revolved quads stay near square.
    pub fn sample_conformal(&self, n_phi: usize, gamma_min: f64, max_ds: f64) -> ProfileCurve {
        let f = TAU / n_phi as f64;
        self.sample(move |g| (g.max(gamma_min) * f).min(max_ds))
    }
}

/// Unit-sphere profile `θ = s`, `γ₁ = sin s`, `γ₂ = −cos s`, scaled by `radius`.
pub fn sphere_profile(radius: f64, samples: usize) -> ProfileCurve {
    let mut b = PathBuilder::new(0.0, -radius, 0.0);
    b.arc(radius, PI);
    b.sample_uniform(PI * radius / (samples.max(2) - 1) as f64)
}

/// Capsule: two unit hemispheres joined by a cylinder of the given length.
pub fn capsule_path(radius: f64, cylinder: f64) -> PathBuilder {
    let mut b = PathBuilder::new(0.0, -radius, 0.0);
    b.arc(radius, FRAC_PI_2).line(cylinder).arc(radius, FRAC_PI_2);
    b
}

/// Stack of `n` humps built from unit arcs and axis-parallel lines; the
/// total mean curvature decreases by about `2π²R` per hump.
pub fn hump_stack_path(n: usize, r: f64) -> Result<PathBuilder, AxisymError> {
    if n < 1 {
        return Err(AxisymError::Precondition("need at least one hump".into()));
    }
    if !(r > 2.0) {
        return Err(AxisymError::Precondition(format!("R = {r} must exceed 2")));
    }
    let left = (r - 1.0).min(2.0);
    let height = 4.0 * n as f64;
    let mut b = PathBuilder::new(0.0, 0.0, 0.0);
    b.line(r).arc(1.0, FRAC_PI_2).line(height - 1.0).arc(1.0, FRAC_PI_2);
    b.line(r - left);
    for k in 0..n {
        if k > 0 {
            b.line(r - 1.0 - left);
        }
        b.arc(1.0, PI).line(r - 1.0 - left).arc(1.0, -PI);
    }
    b.line(r - 1.0);
    Ok(b)
}

pub fn make_hump_stack_curve(n: usize, r: f64, max_ds: f64) -> Result<ProfileCurve, AxisymError> {
    Ok(hump_stack_path(n, r)?.sample_uniform(max_ds))
}

/// Lower half of the sloped counterexample followed by its mirror image
/// `θ(s) = π − θ(L − s)` across the plane `z = 0`.
pub fn slope_counterexample_path(eps: f64, delta: f64) -> Result<PathBuilder, AxisymError> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(AxisymError::Precondition(format!("eps = {eps} must lie in (0, 0.5]")));
    }
    if !(delta > 0.0 && delta <= 0.05) {
        return Err(AxisymError::Precondition(format!("delta = {delta} must lie in (0, 0.05]")));
    }
    let tilt = FRAC_PI_2 + eps;
    let mut lower = PathBuilder::new(0.0, -delta, 0.0);
    lower
        .line(1.0)
        .arc(delta, -tilt)
        .line(1.0 / eps)
        .arc(delta, tilt)
        .line(1.0)
        .arc(delta, FRAC_PI_2);
    let (_, z, _) = lower.end();
    if !(z < 0.0) {
        return Err(AxisymError::Construction("vertical segment has non-positive length".into()));
    }
    lower.line(-z);
    let mirrored: Vec<Segment> = lower.segments.iter().rev().copied().collect();
    lower.segments.extend(mirrored);
    let (x_end, z_end, th_end) = lower.end();
    if x_end.abs() > PROFILE_TOL || (z_end - delta).abs() > PROFILE_TOL || (th_end - PI).abs() > 1e-9 {
        return Err(AxisymError::Construction(format!(
            "closure failure: end = ({x_end:e}, {z_end}), theta = {th_end}"
        )));
    }
    Ok(lower)
}

pub fn make_slope_counterexample_curve(eps: f64, delta: f64, samples: usize) -> Result<ProfileCurve, AxisymError> {
    let b = slope_counterexample_path(eps, delta)?;
    let c = b.sample_uniform(b.total_length() / samples.max(16) as f64);
    c.validate()?;
    Ok(c)
}

/// Random admissible profile: bounded-slope piecewise-linear θ from 0 to π,
/// closed by a `c·sin(πs/T)` correction. Returns `None` when the draw leaves
/// the window, touches the axis or does not rise.
pub fn random_window_curve(rng: &mut impl Rng, samples: usize) -> Option<ProfileCurve> {
    let knots = rng.gen_range(4..16);
    let amp = rng.gen_range(0.5..4.0);
    let mut walk = vec![0.0];
    for _ in 0..knots {
        let last = *walk.last().unwrap();
        walk.push(last + rng.gen_range(-amp..amp));
    }
    let drift = PI - walk[knots];
    let knot_theta: Vec<f64> = walk.iter().enumerate().map(|(k, w)| w + drift * k as f64 / knots as f64).collect();
    let n = samples.max(32);
    let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let base: Vec<f64> = s
        .iter()
        .map(|&u| {
            let x = u * knots as f64;
            let i = (x.floor() as usize).min(knots - 1);
            let f = x - i as f64;
            knot_theta[i] * (1.0 - f) + knot_theta[i + 1] * f
        })
        .collect();
    let theta_for = |c: f64| -> Vec<f64> {
        s.iter().zip(&base).map(|(&u, &b)| b + c * (PI * u).sin()).collect()
    };
    let int_cos = |c: f64| -> f64 {
        let th = theta_for(c);
        let mut acc = 0.0;
        for k in 1..n {
            let h = s[k] - s[k - 1];
            acc += chord(th[k - 1], (th[k] - th[k - 1]) / h, h).0;
        }
        acc
    };
    let grid: Vec<f64> = (0..=120).map(|i| -6.0 + 0.1 * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&c| int_cos(c)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        if vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum() {
            roots.push(i);
        }
    }
    if roots.is_empty() {
        return None;
    }
    let i = roots[rng.gen_range(0..roots.len())];
    let (mut lo, mut hi) = (grid[i], grid[i + 1]);
    let flo = int_cos(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if int_cos(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let th = theta_for(0.5 * (lo + hi));
    let curve = ProfileCurve::from_theta(&s, &th, 0.0, 0.0);
    let (tmin, tmax) = curve.theta_range();
    let last = curve.samples[n - 1];
    let admissible = tmin >= -FRAC_PI_2
        && tmax <= 1.5 * PI
        && last.gamma2 > 0.0
        && last.gamma1.abs() <= PROFILE_TOL
        && curve.samples[1..n - 1].iter().all(|p| p.gamma1 > 0.0);
    admissible.then_some(curve)
}

/// Draws `count` admissible curves from a seeded stream.
pub fn random_window_curves(seed: u64, count: usize, samples: usize) -> Vec<ProfileCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < count * 1000 {
        attempts += 1;
        if let Some(c) = random_window_curve(&mut rng, samples) {
            out.push(c);
        }
    }
    out
}

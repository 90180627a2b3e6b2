//! Second-order jets of planar scalar functions.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Vector2};

/// Value, gradient and Hessian of a function of two variables at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

impl Jet {
    pub fn zero() -> Self {
        Self { value: 0.0, grad: Vector2::zeros(), hess: Matrix2::zeros() }
    }

    pub fn constant(c: f64) -> Self {
        Self { value: c, ..Self::zero() }
    }

    /// Jet of `φ(|z|)` from the radial derivatives `[φ, φ', φ'']` at `r = |z| > 0`.
    pub fn radial(z: Vector2<f64>, d: [f64; 3]) -> Self {
        let r = z.norm();
        let u = z / r;
        let uu = u * u.transpose();
        Self {
            value: d[0],
            grad: u * d[1],
            hess: uu * d[2] + (Matrix2::identity() - uu) * (d[1] / r),
        }
    }

    /// Jet of `x² − y²`.
    pub fn cos2_poly(z: Vector2<f64>) -> Self {
        Self {
            value: z.x * z.x - z.y * z.y,
            grad: Vector2::new(2.0 * z.x, -2.0 * z.y),
            hess: Matrix2::new(2.0, 0.0, 0.0, -2.0),
        }
    }

    /// Jet of `2xy`.
    pub fn sin2_poly(z: Vector2<f64>) -> Self {
        Self {
            value: 2.0 * z.x * z.y,
            grad: Vector2::new(2.0 * z.y, 2.0 * z.x),
            hess: Matrix2::new(0.0, 2.0, 2.0, 0.0),
        }
    }

    /// Jet of the quadratic form `½ zᵀ M z`.
    pub fn quadratic(z: Vector2<f64>, m: &Matrix2<f64>) -> Self {
        let s = 0.5 * (m + m.transpose());
        Self { value: 0.5 * z.dot(&(s * z)), grad: s * z, hess: s }
    }

    pub fn laplacian(&self) -> f64 {
        self.hess.trace()
    }

    /// Mean curvature (sum of principal curvatures, upward normal) of the graph.
    pub fn graph_mean_curvature(&self) -> f64 {
        let (ux, uy) = (self.grad.x, self.grad.y);
        let (uxx, uxy, uyy) = (self.hess[(0, 0)], self.hess[(0, 1)], self.hess[(1, 1)]);
        let q = 1.0 + ux * ux + uy * uy;
        ((1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy) / q.powf(1.5)
    }

    /// Area element `√det G` of the graph.
    pub fn graph_area_element(&self) -> f64 {
        (1.0 + self.grad.norm_squared()).sqrt()
    }

    pub fn scale(self, c: f64) -> Self {
        Self { value: self.value * c, grad: self.grad * c, hess: self.hess * c }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { value: self.value + o.value, grad: self.grad + o.grad, hess: self.hess + o.hess }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            value: self.value * o.value,
            grad: self.grad * o.value + o.grad * self.value,
            hess: self.hess * o.value
                + o.hess * self.value
                + self.grad * o.grad.transpose()
                + o.grad * self.grad.transpose(),
        }
    }
}

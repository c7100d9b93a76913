//! Second-order forward-mode jets in two variables.
//!
//! Used to evaluate curvature operators of closed-form graphs without
//! discretisation error.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar function of `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    /// The coordinate function `x_i` evaluated at `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; 2];
        d[i] = 1.0;
        Self { v, d, h: [[0.0; 2]; 2] }
    }

    /// Chain rule for a scalar function with derivatives `f0, f1, f2`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..2 {
            out.d[i] = f1 * self.d[i];
            for j in 0..2 {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.d[i] * self.d[j];
            }
        }
        out
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powi(self, n: i32) -> Self {
        let nf = n as f64;
        self.chain(self.v.powi(n), nf * self.v.powi(n - 1), nf * (nf - 1.0) * self.v.powi(n - 2))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        let mut out = self;
        out.v += o.v;
        for i in 0..2 {
            out.d[i] += o.d[i];
            for j in 0..2 {
                out.h[i][j] += o.h[i][j];
            }
        }
        out
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.v * o.v);
        for i in 0..2 {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..2 {
                out.h[i][j] = self.h[i][j] * o.v
                    + self.d[i] * o.d[j]
                    + self.d[j] * o.d[i]
                    + self.v * o.h[i][j];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, c: f64) -> Jet2 {
        Jet2 { v: self.v + c, ..self }
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(self, c: f64) -> Jet2 {
        self + (-c)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        let mut out = self;
        out.v *= c;
        for i in 0..2 {
            out.d[i] *= c;
            for j in 0..2 {
                out.h[i][j] *= c;
            }
        }
        out
    }
}

/// `div(grad u / sqrt(1 + |grad u|^2))` from a second-order jet of `u`.
pub fn graph_mean_curvature_operator(u: &Jet2) -> f64 {
    let (ux, uy) = (u.d[0], u.d[1]);
    let (uxx, uxy, uyy) = (u.h[0][0], u.h[0][1], u.h[1][1]);
    let w2 = 1.0 + ux * ux + uy * uy;
    ((1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy) / (w2 * w2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let x = Jet2::variable(1.5, 0);
        let y = Jet2::variable(-0.5, 1);
        // f = x^2 y + 3 x
        let f = x * x * y + x * 3.0;
        assert_eq!(f.v, 1.5 * 1.5 * -0.5 + 4.5);
        assert_eq!(f.d, [2.0 * 1.5 * -0.5 + 3.0, 1.5 * 1.5]);
        assert_eq!(f.h, [[2.0 * -0.5, 3.0], [3.0, 0.0]]);
    }

    #[test]
    fn sqrt_and_division() {
        let x = Jet2::variable(2.0, 0);
        let f = x.sqrt();
        assert!((f.d[0] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((f.h[0][0] + 0.25 * 2f64.powf(-1.5)).abs() < 1e-15);
        let g = Jet2::constant(1.0) / x;
        assert!((g.h[0][0] - 0.25).abs() < 1e-15);
        let p = x.powi(3);
        assert!((p.h[0][0] - 12.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_graph_has_constant_operator() {
        // lower hemisphere of radius 2: operator equals 2/R = 1
        let x = Jet2::variable(0.3, 0);
        let y = Jet2::variable(-0.7, 1);
        let u = -(Jet2::constant(4.0) - x * x - y * y).sqrt();
        assert!((graph_mean_curvature_operator(&u) - 1.0).abs() < 1e-14);
    }
}

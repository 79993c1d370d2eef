//! Second-order forward-mode automatic differentiation in four variables.
//!
//! A [`Dual2`] carries a value together with its gradient and Hessian with
//! respect to the Euclidean coordinates x¹..x⁴. The built-in metric families
//! write their conformal factor once in terms of `Dual2` arithmetic and get
//! exact (to roundoff) 2-jets for free.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::geometry::{Jet2, Point4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub g: [f64; 4],
    pub h: [[f64; 4]; 4],
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; 4],
            h: [[0.0; 4]; 4],
        }
    }

    /// The coordinate function x^i evaluated at `x`.
    pub fn coordinate(x: &Point4, i: usize) -> Self {
        let mut d = Self::constant(x[i]);
        d.g[i] = 1.0;
        d
    }

    pub fn coordinates(x: &Point4) -> [Self; 4] {
        [0, 1, 2, 3].map(|i| Self::coordinate(x, i))
    }

    /// Composes a scalar function with known first and second derivatives.
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..4 {
            out.g[i] = df * self.g[i];
            for j in 0..4 {
                out.h[i][j] = df * self.h[i][j] + d2f * self.g[i] * self.g[j];
            }
        }
        out
    }

    pub fn ln(self) -> Self {
        let x = self.v;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn powi(self, n: i32) -> Self {
        let x = self.v;
        let nf = f64::from(n);
        let d2 = if !(0..2).contains(&n) {
            nf * (nf - 1.0) * x.powi(n - 2)
        } else {
            0.0
        };
        let d1 = if n != 0 { nf * x.powi(n - 1) } else { 0.0 };
        self.chain(x.powi(n), d1, d2)
    }

    pub fn scale(self, c: f64) -> Self {
        let mut out = self;
        out.v *= c;
        for i in 0..4 {
            out.g[i] *= c;
            for j in 0..4 {
                out.h[i][j] *= c;
            }
        }
        out
    }

    pub fn to_jet(self) -> Jet2 {
        Jet2 {
            value: self.v,
            grad: self.g,
            hess: self.h,
        }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, rhs: Dual2) -> Dual2 {
        let mut out = self;
        out.v += rhs.v;
        for i in 0..4 {
            out.g[i] += rhs.g[i];
            for j in 0..4 {
                out.h[i][j] += rhs.h[i][j];
            }
        }
        out
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    fn add(mut self, rhs: f64) -> Dual2 {
        self.v += rhs;
        self
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, rhs: Dual2) -> Dual2 {
        self + (-rhs)
    }
}

impl Sub<f64> for Dual2 {
    type Output = Dual2;
    fn sub(mut self, rhs: f64) -> Dual2 {
        self.v -= rhs;
        self
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        self.scale(-1.0)
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, rhs: Dual2) -> Dual2 {
        let mut out = Dual2::constant(self.v * rhs.v);
        for i in 0..4 {
            out.g[i] = self.g[i] * rhs.v + self.v * rhs.g[i];
            for j in 0..4 {
                out.h[i][j] = self.h[i][j] * rhs.v
                    + self.v * rhs.h[i][j]
                    + self.g[i] * rhs.g[j]
                    + self.g[j] * rhs.g[i];
            }
        }
        out
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    fn mul(self, rhs: f64) -> Dual2 {
        self.scale(rhs)
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    fn div(self, rhs: Dual2) -> Dual2 {
        let x = rhs.v;
        self * rhs.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}

impl Div<f64> for Dual2 {
    type Output = Dual2;
    fn div(self, rhs: f64) -> Dual2 {
        self.scale(1.0 / rhs)
    }
}

//! Quadrature rules: Gauss–Legendre on [-1, 1] and a product rule on S³.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point4;

/// Pairwise (cascade) summation. Deterministic for a fixed input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// n-point Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on the unit 3-sphere with weights normalized to sum to one,
/// so that `average` realizes (1/|S³|)∮ f dθ.
///
/// Hyperspherical angles ψ₁, ψ₂ ∈ [0, π], φ ∈ [0, 2π):
/// θ = (cos ψ₁, sin ψ₁ cos ψ₂, sin ψ₁ sin ψ₂ cos φ, sin ψ₁ sin ψ₂ sin φ),
/// dθ = sin²ψ₁ sin ψ₂ dψ₁ dψ₂ dφ. Gauss–Chebyshev (second kind) in cos ψ₁
/// absorbs the sin²ψ₁ weight, Gauss–Legendre in cos ψ₂, trapezoid in φ.
#[derive(Debug, Clone)]
pub struct SphericalQuadrature {
    pub nodes: Vec<Point4>,
    pub weights: Vec<f64>,
    /// Every polynomial in θ of total degree ≤ `degree` is integrated exactly.
    pub degree: usize,
}

impl SphericalQuadrature {
    pub fn product(degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidInput(
                "quadrature degree must be at least 1".into(),
            ));
        }
        let n = (degree + 2) / 2;
        let m = degree + 1;
        let cheb: Vec<(f64, f64)> = (1..=n)
            .map(|j| {
                let a = j as f64 * PI / (n as f64 + 1.0);
                (a.cos(), PI / (n as f64 + 1.0) * a.sin().powi(2))
            })
            .collect();
        let (gx, gw) = gauss_legendre(n);
        let norm = 2.0 * PI * PI;
        let mut nodes = Vec::with_capacity(n * n * m);
        let mut weights = Vec::with_capacity(n * n * m);
        for &(c1, w1) in &cheb {
            let s1 = (1.0 - c1 * c1).sqrt();
            for (&c2, &w2) in gx.iter().zip(&gw) {
                let s2 = (1.0 - c2 * c2).sqrt();
                for k in 0..m {
                    // Half-step offset keeps nodes off the coordinate great circles.
                    let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    nodes.push([c1, s1 * c2, s1 * s2 * phi.cos(), s1 * s2 * phi.sin()]);
                    weights.push(w1 * w2 * (2.0 * PI / m as f64) / norm);
                }
            }
        }
        Ok(Self {
            nodes,
            weights,
            degree,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Normalized average Σ wᵢ fᵢ of per-node values.
    pub fn average(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .collect();
        pairwise_sum(&terms)
    }

    pub fn describe(&self) -> String {
        format!(
            "product S3 rule, degree {}, {} nodes",
            self.degree,
            self.len()
        )
    }
}

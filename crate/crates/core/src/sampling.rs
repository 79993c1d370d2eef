//! Quasi-random interior sampling and pointwise curvature scans.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{distance, norm, sigma_k, Point4};
use crate::metrics::ConformalMetric;

/// Largest radius used for interior sampling.
pub const SAMPLE_R_MAX: f64 = 0.98;
/// Samples closer than this to a cone point or the excluded core are skipped.
pub const SINGULAR_CLEARANCE: f64 = 1e-3;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    x
}

/// Point `i` of the 4-dimensional Halton sequence (bases 2, 3, 5, 7).
pub fn halton4(i: u64) -> [f64; 4] {
    [2, 3, 5, 7].map(|b| radical_inverse(i, b))
}

/// Maps a point of [0,1)⁴ to the shell r_min ≤ |x| ≤ r_max, uniformly in volume.
pub fn map_to_shell(q: &[f64; 4], r_min: f64, r_max: f64) -> Point4 {
    let (a, b) = (r_min.powi(4), r_max.powi(4));
    let r = (a + q[0] * (b - a)).powf(0.25);
    let (c1, s1) = (q[1].sqrt(), (1.0 - q[1]).sqrt());
    let (p2, p3) = (std::f64::consts::TAU * q[2], std::f64::consts::TAU * q[3]);
    [
        r * s1 * p2.cos(),
        r * s1 * p2.sin(),
        r * c1 * p3.cos(),
        r * c1 * p3.sin(),
    ]
}

/// `n` deterministic quasi-random points in r_min ≤ |x| ≤ r_max that keep
/// [`SINGULAR_CLEARANCE`] from the cones and the excluded core of `metric`.
pub fn interior_points(
    metric: &ConformalMetric,
    n: usize,
    r_min: f64,
    r_max: f64,
) -> Result<Vec<Point4>> {
    if !(0.0 <= r_min && r_min < r_max && r_max < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= r_min < r_max < 1, got {r_min}, {r_max}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    let mut i = 1u64;
    let limit = 1000 * n as u64 + 1000;
    while out.len() < n {
        if i > limit {
            return Err(Error::InsufficientData(format!(
                "only {} admissible sample points in the shell [{r_min}, {r_max}]",
                out.len()
            )));
        }
        let x = map_to_shell(&halton4(i), r_min, r_max);
        i += 1;
        let clear = metric
            .cones
            .iter()
            .all(|c| distance(&x, &c.position) > SINGULAR_CLEARANCE)
            && norm(&x) > metric.core_radius + SINGULAR_CLEARANCE;
        if clear {
            out.push(x);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Summary of σ₂ and σ₁ over quasi-random interior points.
#[derive(Debug, Clone, Serialize)]
pub struct Sigma2Scan {
    pub metric: String,
    pub samples: usize,
    pub min_sigma2: f64,
    pub max_sigma2: f64,
    pub argmin_sigma2: Point4,
    pub min_sigma1: f64,
    pub max_sigma1: f64,
    /// σ₁ < 0 at every sample.
    pub negative_cone: bool,
    /// σ₂ ≥ 3/2 − tol at every sample.
    pub hypothesis_holds: bool,
    pub tol: f64,
    pub histogram: Vec<HistogramBin>,
}

/// σ₂ and σ₁ at `samples` points of the punctured disc (|x| ≤ 0.98).
///
/// Results are independent of the thread count: points are generated
/// sequentially and per-point results are collected in order.
pub fn sigma2_scan(metric: &ConformalMetric, samples: usize, tol: f64) -> Result<Sigma2Scan> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let pts = interior_points(metric, samples, 0.0, SAMPLE_R_MAX)?;
    let vals: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|x| {
            let j = metric.jet(x)?;
            Ok((sigma_k(&j, 2)?, sigma_k(&j, 1)?))
        })
        .collect::<Result<_>>()?;
    let mut min2 = f64::INFINITY;
    let mut max2 = f64::NEG_INFINITY;
    let mut min1 = f64::INFINITY;
    let mut max1 = f64::NEG_INFINITY;
    let mut argmin = pts[0];
    for (x, &(s2, s1)) in pts.iter().zip(&vals) {
        if s2 < min2 {
            min2 = s2;
            argmin = *x;
        }
        max2 = max2.max(s2);
        min1 = min1.min(s1);
        max1 = max1.max(s1);
    }
    const BINS: usize = 20;
    let width = (max2 - min2) / BINS as f64;
    let mut histogram: Vec<HistogramBin> = (0..BINS)
        .map(|b| HistogramBin {
            lo: min2 + b as f64 * width,
            hi: if b + 1 == BINS {
                max2
            } else {
                min2 + (b + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for &(s2, _) in &vals {
        let b = if width > 0.0 {
            (((s2 - min2) / width) as usize).min(BINS - 1)
        } else {
            0
        };
        histogram[b].count += 1;
    }
    Ok(Sigma2Scan {
        metric: metric.descriptor.clone(),
        samples,
        min_sigma2: min2,
        max_sigma2: max2,
        argmin_sigma2: argmin,
        min_sigma1: min1,
        max_sigma1: max1,
        negative_cone: max1 < 0.0,
        hypothesis_holds: min2 >= 1.5 - tol,
        tol,
        histogram,
    })
}

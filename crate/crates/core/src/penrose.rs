//! Cone data F(β), the σ₂ mass m₂, both limits of m(t) and the Penrose verdict.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{norm, Point4};
use crate::levelset::{
    boundary_levels, mass_profile, monotonicity_check, singular_levels, MassProfile,
    MonotonicityReport,
};
use crate::metrics::ConformalMetric;
use crate::quadrature::SphericalQuadrature;
use crate::sampling::sigma2_scan;

/// Default tolerance on |penrose_gap| and on profile flatness for rigidity.
pub const RIGIDITY_TOL: f64 = 1e-4;
/// Number of extreme levels used on each side by [`limit_estimates`].
pub const LIMIT_WINDOW: usize = 5;
/// Boundary-side s-samples used to fit the s⁴ coefficient.
pub const FIT_S_SAMPLES: [f64; 6] = [0.02, 0.035, 0.05, 0.065, 0.08, 0.1];
/// Boundary-side levels span s = log(1/r) over this range.
pub const BOUNDARY_S_RANGE: (f64, f64) = (0.2, 0.02);

pub const NORMALIZATION_NOTE: &str = "F includes the factor 1/20: F = (1/20)[bt^2(bt+2)^2 + (8/3 bt + 4)(sum b_i^2 - bt^2)] \
with bt = (sum b_i^3)^(1/3), and lim_{t->-inf} m(t) = F. This matches the single-cone CHY relation \
-m2 = k^2/20 = (1/20) b^2 (b+2)^2 and the level-set limit (1/5)[bt^4/4 + bt^3/3 + (2/3) bt sum b_i^2 + sum b_i^2]; \
the variants that omit the 1/20 or apply it twice are inconsistent with both.";

fn check_betas(betas: &[f64]) -> Result<()> {
    match betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
        Some(b) => Err(Error::InvalidInput(format!(
            "cone parameters must be finite and >= 0, got {b}"
        ))),
        None => Ok(()),
    }
}

/// β̃ = (Σβᵢ³)^{1/3}.
pub fn beta_tilde(betas: &[f64]) -> Result<f64> {
    check_betas(betas)?;
    Ok(betas.iter().fold(0.0, |acc, b| acc + b * b * b).cbrt())
}

/// F(β) = (1/20)[β̃²(β̃+2)² + (8/3·β̃ + 4)(Σβᵢ² − β̃²)]; F = 0 without cones.
pub fn f_of_beta(betas: &[f64]) -> Result<f64> {
    let bt = beta_tilde(betas)?;
    let sq = betas.iter().fold(0.0, |acc, b| acc + b * b);
    Ok((bt * bt * (bt + 2.0).powi(2) + (8.0 / 3.0 * bt + 4.0) * (sq - bt * bt)) / 20.0)
}

/// The level-set limit form (1/5)[β̃⁴/4 + β̃³/3 + (2/3)β̃Σβᵢ² + Σβᵢ²], equal to [`f_of_beta`].
pub fn f_of_beta_limit_form(betas: &[f64]) -> Result<f64> {
    let bt = beta_tilde(betas)?;
    let sq = betas.iter().fold(0.0, |acc, b| acc + b * b);
    Ok((bt.powi(4) / 4.0 + bt.powi(3) / 3.0 + 2.0 / 3.0 * bt * sq + sq) / 5.0)
}

/// m₂ = ⨏ f dθ from values of f at the quadrature nodes.
pub fn m2_of_boundary(f_values: &[f64], quad: &SphericalQuadrature) -> Result<f64> {
    if f_values.len() != quad.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} boundary values, got {}",
            quad.len(),
            f_values.len()
        )));
    }
    if let Some(v) = f_values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "boundary value {v} is not finite"
        )));
    }
    Ok(quad.average(f_values))
}

/// Per-direction least-squares fits of u(rθ) − s + log sinh s ≈ f(θ)s⁴.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryFit {
    pub coefficients: Vec<f64>,
    /// Euclidean norm of the fit residual over the s-samples.
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Fits the s⁴ coefficient along each direction from u at r = e^{−s}.
///
/// A residual above 10% of the fitted term (and above 1e−12) adds a
/// poor-fit warning: the remainder is not small at these s.
pub fn fit_boundary_coefficient(
    metric: &ConformalMetric,
    directions: &[Point4],
    s_samples: &[f64],
) -> Result<BoundaryFit> {
    if s_samples.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 s-samples, got {}",
            s_samples.len()
        )));
    }
    if let Some(s) = s_samples.iter().find(|s| !(**s > 0.0 && **s < 0.2)) {
        return Err(Error::InvalidInput(format!(
            "s-samples must lie in (0, 0.2), got {s}"
        )));
    }
    let s4: Vec<f64> = s_samples.iter().map(|s| s.powi(4)).collect();
    let s8: f64 = s4.iter().map(|x| x * x).sum();
    let mut fit = BoundaryFit {
        coefficients: Vec::with_capacity(directions.len()),
        residuals: Vec::with_capacity(directions.len()),
        warnings: Vec::new(),
    };
    for (d, theta) in directions.iter().enumerate() {
        let n = norm(theta);
        if !(n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "direction {d} has zero length"
            )));
        }
        let mut y = Vec::with_capacity(s_samples.len());
        for &s in s_samples {
            let r = (-s).exp() / n;
            let x = theta.map(|c| c * r);
            y.push(metric.value(&x)? - s + s.sinh().ln());
        }
        let a = y.iter().zip(&s4).map(|(y, x)| y * x).sum::<f64>() / s8;
        let res = y
            .iter()
            .zip(&s4)
            .map(|(y, x)| (y - a * x).powi(2))
            .sum::<f64>()
            .sqrt();
        let term = a.abs() * s8.sqrt();
        if res > 0.1 * term && res > 1e-12 {
            fit.warnings.push(format!(
                "poor s^4 fit along direction {d}: residual {res:.3e} vs fitted term {term:.3e}"
            ));
        }
        fit.coefficients.push(a);
        fit.residuals.push(res);
    }
    Ok(fit)
}

/// Extrapolated limit of m(t) on one side.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SideLimit {
    pub value: f64,
    pub error: f64,
    /// Fitted exponential rate σ, or None when the fallback was used.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitEstimates {
    pub limit_neg: SideLimit,
    pub limit_pos: SideLimit,
}

const RATE_MIN: f64 = 0.05;
const RATE_MAX: f64 = 20.0;

/// Least-squares fit of m ≈ L + a·x with x = e^{−σd}; returns (L, rms residual).
fn fit_at_rate(d: &[f64], m: &[f64], sigma: f64) -> Option<(f64, f64)> {
    let n = d.len() as f64;
    let x: Vec<f64> = d.iter().map(|d| (-sigma * d).exp()).collect();
    let (sx, sy) = (x.iter().sum::<f64>(), m.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|x| x * x).sum();
    let sxy: f64 = x.iter().zip(m).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    if !(det.abs() > 1e-300) {
        return None;
    }
    let a = (n * sxy - sx * sy) / det;
    let l = (sy - a * sx) / n;
    let rss: f64 = x.iter().zip(m).map(|(x, y)| (y - l - a * x).powi(2)).sum();
    Some((l, (rss / n).sqrt()))
}

/// Extrapolates one side. `d` are distances from the innermost level toward
/// the extreme one (d = 0 farthest from the limit), so the correction decays in d.
fn extrapolate(d: &[f64], m: &[f64]) -> SideLimit {
    let extreme = *m.last().unwrap();
    let spread = m.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - m.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let fallback = SideLimit {
        value: extreme,
        error: spread,
        rate: None,
    };
    if spread <= 1e-13 * extreme.abs().max(1.0) {
        return fallback;
    }
    let cost = |s: f64| fit_at_rate(d, m, s).map_or(f64::INFINITY, |(_, r)| r);
    // Golden-section search in log σ.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (RATE_MIN.ln(), RATE_MAX.ln());
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (cost(x1.exp()), cost(x2.exp()));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = cost(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = cost(x2.exp());
        }
    }
    let sigma = (0.5 * (lo + hi)).exp();
    let at_edge = !(RATE_MIN * 1.01..=RATE_MAX * 0.99).contains(&sigma);
    match fit_at_rate(d, m, sigma) {
        Some((l, rms)) if !at_edge && l.is_finite() && (l - extreme).abs() <= 10.0 * spread => {
            let dof = (d.len() as f64 / (d.len() as f64 - 3.0)).sqrt();
            SideLimit {
                value: l,
                error: (rms * dof).max(f64::EPSILON * l.abs()),
                rate: Some(sigma),
            }
        }
        _ => fallback,
    }
}

/// Limits of m(t) as t → −∞ and t → +∞ from the [`LIMIT_WINDOW`] extreme
/// levels on each side, fitting m ≈ L + a·e^{−σ|t|} with σ by golden-section
/// search; falls back to the extreme value with the window spread as error.
pub fn limit_estimates(profile: &MassProfile) -> Result<LimitEstimates> {
    let rows = &profile.rows;
    if rows.len() < 2 * LIMIT_WINDOW {
        return Err(Error::InsufficientData(format!(
            "limit estimates need {} levels per side, profile has {} levels",
            LIMIT_WINDOW,
            rows.len()
        )));
    }
    let neg = &rows[..LIMIT_WINDOW];
    let pos = &rows[rows.len() - LIMIT_WINDOW..];
    let t_in = neg[LIMIT_WINDOW - 1].t;
    let (d_neg, m_neg): (Vec<f64>, Vec<f64>) = neg.iter().rev().map(|r| (t_in - r.t, r.m)).unzip();
    let t_in = pos[0].t;
    let (d_pos, m_pos): (Vec<f64>, Vec<f64>) = pos.iter().map(|r| (r.t - t_in, r.m)).unzip();
    Ok(LimitEstimates {
        limit_neg: extrapolate(&d_neg, &m_neg),
        limit_pos: extrapolate(&d_pos, &m_pos),
    })
}

/// Inputs to [`penrose_verdict`].
#[derive(Debug, Clone)]
pub struct VerdictInputs {
    pub betas: Vec<f64>,
    pub m2: f64,
    pub limits: LimitEstimates,
    pub monotonicity: MonotonicityReport,
    /// max m − min m over the profile.
    pub profile_spread: f64,
    pub min_sigma2: f64,
    pub sigma2_tol: f64,
    pub m2_fit: Option<f64>,
    pub gaps: usize,
    pub levels: usize,
}

/// Penrose inequality report. The first fields and `normalization_note` form
/// the fixed schema; the remainder are diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct PenroseReport {
    pub beta_tilde: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub m2: f64,
    pub limit_neg: f64,
    pub limit_pos: f64,
    /// "pass" when every adjacent difference of m is ≥ −tol, otherwise "fail".
    pub monotone_verdict: String,
    pub penrose_gap: f64,
    pub rigidity_flag: bool,
    pub normalization_note: String,
    pub betas: Vec<f64>,
    pub min_sigma2: f64,
    /// Sampled min σ₂ ≥ 3/2 − tol.
    pub hypothesis_holds: bool,
    /// penrose_gap ≥ −tol.
    pub inequality_holds: bool,
    pub limit_neg_error: f64,
    pub limit_pos_error: f64,
    pub monotone_min_difference: f64,
    pub profile_spread: f64,
    /// "consistent with CHY β=…" / "consistent with H⁴" when rigid, else "none".
    pub model: String,
    pub m2_fit: Option<f64>,
    pub levels: usize,
    pub gaps: usize,
    pub tol: f64,
}

impl PenroseReport {
    /// True when the gap is negative beyond tolerance although the sampled
    /// curvature hypothesis holds.
    pub fn contradicts_theorem(&self) -> bool {
        !self.inequality_holds && self.hypothesis_holds
    }
}

fn short(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    format!("{r}")
}

/// Assembles the report: gap = −m₂ − F, pass iff gap ≥ −tol; rigidity iff
/// |gap| < tol and the profile is constant within tol.
pub fn penrose_verdict(inputs: &VerdictInputs, tol: f64) -> Result<PenroseReport> {
    let bt = beta_tilde(&inputs.betas)?;
    let f = f_of_beta(&inputs.betas)?;
    let gap = (0.0 - inputs.m2) - f;
    let rigid = gap.abs() < tol && inputs.profile_spread < tol;
    let model = if !rigid {
        "none".to_string()
    } else if inputs.betas.is_empty() || bt == 0.0 {
        "consistent with H⁴".to_string()
    } else {
        format!("consistent with CHY β={}", short(bt))
    };
    Ok(PenroseReport {
        beta_tilde: bt,
        f,
        m2: inputs.m2,
        limit_neg: inputs.limits.limit_neg.value,
        limit_pos: inputs.limits.limit_pos.value,
        monotone_verdict: if inputs.monotonicity.pass {
            "pass"
        } else {
            "fail"
        }
        .into(),
        penrose_gap: gap,
        rigidity_flag: rigid,
        normalization_note: NORMALIZATION_NOTE.into(),
        betas: inputs.betas.clone(),
        min_sigma2: inputs.min_sigma2,
        hypothesis_holds: inputs.min_sigma2 >= 1.5 - inputs.sigma2_tol,
        inequality_holds: gap >= -tol,
        limit_neg_error: inputs.limits.limit_neg.error,
        limit_pos_error: inputs.limits.limit_pos.error,
        monotone_min_difference: inputs.monotonicity.min_difference,
        profile_spread: inputs.profile_spread,
        model,
        m2_fit: inputs.m2_fit,
        levels: inputs.levels,
        gaps: inputs.gaps,
        tol,
    })
}

/// Options for [`verify`].
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Total levels, split between the boundary and singular ends.
    pub levels: usize,
    pub degree: usize,
    pub tol: f64,
    pub sigma2_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            levels: 40,
            degree: 11,
            tol: RIGIDITY_TOL,
            sigma2_samples: 2000,
        }
    }
}

/// Level plan for [`verify`]: ⌈n/2⌉ boundary levels and ⌊n/2⌋ singular levels.
pub fn verify_levels(metric: &ConformalMetric, levels: usize) -> Result<Vec<f64>> {
    let n_sing = levels / 2;
    let mut ts = boundary_levels(levels - n_sing, BOUNDARY_S_RANGE.0, BOUNDARY_S_RANGE.1);
    ts.extend(singular_levels(metric, n_sing)?);
    Ok(ts)
}

/// σ₂ mass: from the metric's boundary data when known, else from the s⁴ fit.
/// Also returns the fitted value.
pub fn boundary_mass(
    metric: &ConformalMetric,
    quad: &SphericalQuadrature,
) -> Result<(f64, f64, Vec<String>)> {
    let fit = fit_boundary_coefficient(metric, &quad.nodes, &FIT_S_SAMPLES)?;
    let m2_fit = m2_of_boundary(&fit.coefficients, quad)?;
    let m2 = match &metric.boundary_f {
        Some(f) => {
            let vals: Vec<f64> = quad.nodes.iter().map(|t| f.eval(t)).collect();
            m2_of_boundary(&vals, quad)?
        }
        None => m2_fit,
    };
    Ok((m2, m2_fit, fit.warnings))
}

/// Full pipeline: σ₂ scan, m(t) profile at both ends, monotonicity, limits,
/// m₂ and the verdict. Returns the profile alongside the report.
pub fn verify(
    metric: &ConformalMetric,
    opts: &VerifyOptions,
) -> Result<(PenroseReport, MassProfile)> {
    if opts.levels < 2 * LIMIT_WINDOW {
        return Err(Error::InvalidInput(format!(
            "verify needs at least {} levels, got {}",
            2 * LIMIT_WINDOW,
            opts.levels
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let quad = SphericalQuadrature::product(opts.degree)?;
    let scan = sigma2_scan(metric, opts.sigma2_samples, opts.tol)?;
    let ts = verify_levels(metric, opts.levels)?;
    let profile = mass_profile(metric, &ts, &quad)?;
    let mono = monotonicity_check(&profile, opts.tol)?;
    let limits = limit_estimates(&profile)?;
    let (m2, m2_fit, _) = boundary_mass(metric, &quad)?;
    let (lo, hi) = profile
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.m), hi.max(r.m))
        });
    let inputs = VerdictInputs {
        betas: metric.betas(),
        m2,
        limits,
        monotonicity: mono,
        profile_spread: hi - lo,
        min_sigma2: scan.min_sigma2,
        sigma2_tol: opts.tol,
        m2_fit: Some(m2_fit),
        gaps: profile.gaps.len(),
        levels: profile.rows.len(),
    };
    Ok((penrose_verdict(&inputs, opts.tol)?, profile))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_tilde_values() {
        assert_eq!(beta_tilde(&[1.0]).unwrap(), 1.0);
        assert!((beta_tilde(&[1.0, 1.0]).unwrap() - 2f64.cbrt()).abs() < 1e-15);
        assert_eq!(beta_tilde(&[]).unwrap(), 0.0);
        assert!(beta_tilde(&[-0.1]).is_err());
    }

    #[test]
    fn f_single_and_pair() {
        assert_eq!(f_of_beta(&[]).unwrap(), 0.0);
        assert!((f_of_beta(&[1.0]).unwrap() - 0.45).abs() < 1e-15);
        let f = f_of_beta(&[1.0, 1.0]).unwrap();
        assert!((f - 0.99531).abs() < 1e-5, "{f}");
        assert!((f - f_of_beta_limit_form(&[1.0, 1.0]).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn extrapolation_recovers_exponential_tail() {
        let d: Vec<f64> = (0..5).map(|i| 0.3 * i as f64).collect();
        let m: Vec<f64> = d.iter().map(|d| -0.3 + 2e-3 * (-2.0 * d).exp()).collect();
        let l = extrapolate(&d, &m);
        assert!((l.value + 0.3).abs() < 1e-10, "{l:?}");
        assert!((l.rate.unwrap() - 2.0).abs() < 1e-4);
    }

    #[test]
    fn flat_profile_uses_fallback() {
        let d = [0.0, 1.0, 2.0, 3.0, 4.0];
        let l = extrapolate(&d, &[0.45; 5]);
        assert_eq!(l.value, 0.45);
        assert_eq!(l.error, 0.0);
        assert!(l.rate.is_none());
    }
}

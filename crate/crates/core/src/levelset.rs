//! Level sets L(t) = {u = t} as radial graphs over S³ and the quasi-local mass
//!
//! ```text
//! z = (⨏|∇u|³)^{1/3},  P = ⨏H|∇u|²,  D = P/2 + z³/2,  C = e^{4t}B,
//! m = (1/5)[(2/3)D + (4/9)Dz + z⁴/36 − C]
//! ```
//!
//! with ⨏ = (1/|S³|)∮_{L(t)} dl, B(t) = |{u < t}|/|S³| and A(t) = ⨏_{u<t} e^{4u}dx.
//!
//! A level is located as one component star-shaped about the origin or, failing
//! that, as one component star-shaped about each cone point. Levels that fit
//! neither picture are topology transitions and are reported as gaps.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    axpy, distance, dot, mean_curvature, norm, sigma_k, Jet2, Point4, GRAD_FLOOR,
};
use crate::metrics::ConformalMetric;
use crate::quadrature::{gauss_legendre, pairwise_sum, SphericalQuadrature};

/// Points in the sign-change scan of [`solve_radius`].
pub const SCAN_POINTS: usize = 64;
/// Inner radius of the origin-centered bracket.
pub const ORIGIN_R_LO: f64 = 1e-9;
/// Outer radius of the origin-centered bracket.
pub const ORIGIN_R_HI: f64 = 1.0 - 1e-9;
/// Cone components are searched within this fraction of the distance to the
/// nearest other cone or the boundary.
pub const CONE_REACH: f64 = 0.45;

fn level_tol(t: f64) -> f64 {
    1e-12 * (1.0 + t.abs())
}

fn scan_radii(lo: f64, hi: f64) -> Vec<f64> {
    let half = SCAN_POINTS / 2;
    let ratio = (hi / lo).ln();
    let mut r: Vec<f64> = (0..half)
        .map(|k| lo * (ratio * k as f64 / (half - 1) as f64).exp())
        .chain(
            (0..SCAN_POINTS - half)
                .map(|k| lo + (hi - lo) * (k + 1) as f64 / (SCAN_POINTS - half + 1) as f64),
        )
        .collect();
    r.sort_by(|a, b| a.total_cmp(b));
    r.dedup();
    r
}

/// Radius r with u(center + rθ) = t, together with the jet there.
fn solve_radius_jet(
    metric: &ConformalMetric,
    theta: &Point4,
    t: f64,
    center: &Point4,
    bracket: (f64, f64),
) -> Result<(f64, Jet2)> {
    let (lo, hi) = bracket;
    if !(0.0 < lo && lo < hi) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bad bracket ({lo}, {hi}) or level {t}"
        )));
    }
    let g = |r: f64| -> Result<f64> { Ok(metric.value(&axpy(center, r, theta))? - t) };
    let radii = scan_radii(lo, hi);
    let vals: Vec<f64> = radii.iter().map(|&r| g(r)).collect::<Result<_>>()?;
    let mut crossings = 0;
    let mut at = 0;
    for k in 0..vals.len() - 1 {
        if (vals[k] < 0.0) != (vals[k + 1] < 0.0) {
            crossings += 1;
            at = k;
        }
    }
    if crossings == 0 {
        return Err(Error::NoRoot { t });
    }
    if crossings > 1 {
        return Err(Error::MultiRoot { t, crossings });
    }
    let (mut a, mut b) = (radii[at], radii[at + 1]);
    let (mut ga, gb) = (vals[at], vals[at + 1]);
    if ga == 0.0 {
        return Ok((a, metric.jet(&axpy(center, a, theta))?));
    }
    if gb == 0.0 {
        return Ok((b, metric.jet(&axpy(center, b, theta))?));
    }
    while b - a > 1e-3 * b {
        let m = 0.5 * (a + b);
        let gm = g(m)?;
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let tol = level_tol(t);
    let mut r = 0.5 * (a + b);
    let mut best: Option<(f64, Jet2)> = None;
    let mut polish = 0;
    for _ in 0..100 {
        let jet = metric.jet(&axpy(center, r, theta))?;
        let gr = jet.value - t;
        if gr.abs() < tol {
            // Near the boundary m cancels terms ~z⁴, so the level is polished to roundoff.
            let better = best
                .as_ref()
                .is_none_or(|(_, j)| gr.abs() < (j.value - t).abs());
            if better {
                best = Some((r, jet));
            }
            polish += 1;
            if gr == 0.0 || polish > 4 {
                break;
            }
        }
        if (gr < 0.0) == (ga < 0.0) {
            a = r;
            ga = gr;
        } else {
            b = r;
        }
        let slope = dot(&jet.grad, theta);
        let newton = r - gr / slope;
        let next = if slope != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - r).abs() <= 2.0 * f64::EPSILON * r || b - a <= 4.0 * f64::EPSILON * b {
            if best.is_none() && (jet.value - t).abs() < 1e3 * tol {
                best = Some((r, jet));
            }
            break;
        }
        r = next;
    }
    best.ok_or_else(|| Error::Numeric(format!("radius solve for level {t} did not converge")))
}

/// Radius r(t, θ) of the level set u = t along the ray center + rθ.
///
/// Errors with `NoRoot` when u − t does not change sign on a 64-point scan of
/// the bracket and with `MultiRoot` when it changes sign more than once.
pub fn solve_radius(
    metric: &ConformalMetric,
    theta: &Point4,
    t: f64,
    center: &Point4,
    bracket: (f64, f64),
) -> Result<f64> {
    solve_radius_jet(metric, theta, t, center, bracket).map(|(r, _)| r)
}

/// One star-shaped component of a level set, sampled at the quadrature nodes.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetSample {
    pub t: f64,
    pub center: Point4,
    pub bracket: (f64, f64),
    pub radius: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub mean_curv: Vec<f64>,
    /// r³√(1 + |∇_{S³}r|²/r²); dl = area_weight dθ.
    pub area_weight: Vec<f64>,
    /// ∇u·θ.
    pub radial_derivative: Vec<f64>,
    /// |∇_{S³}r| = r|∇u^tan|/(∇u·θ).
    pub tangential_grad_r: Vec<f64>,
}

impl LevelSetSample {
    pub fn len(&self) -> usize {
        self.radius.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radius.is_empty()
    }

    /// ⨏ f dl over this component for per-node integrand values.
    pub fn average(&self, quad: &SphericalQuadrature, f: impl Fn(usize) -> f64) -> f64 {
        let vals: Vec<f64> = (0..self.len())
            .map(|i| f(i) * self.area_weight[i])
            .collect();
        quad.average(&vals)
    }
}

/// Samples the component of {u = t} star-shaped about `center` within `bracket`.
pub fn sample_level(
    metric: &ConformalMetric,
    t: f64,
    quad: &SphericalQuadrature,
    center: &Point4,
    bracket: (f64, f64),
) -> Result<LevelSetSample> {
    let per_node: Vec<Result<[f64; 6]>> = quad
        .nodes
        .par_iter()
        .map(|theta| {
            let (r, jet) = solve_radius_jet(metric, theta, t, center, bracket)?;
            let gn = jet.grad_norm();
            let h = mean_curvature(&jet, GRAD_FLOOR)?;
            let radial = dot(&jet.grad, theta);
            if !(radial > GRAD_FLOOR) {
                return Err(Error::DegenerateGradient {
                    norm: radial.abs(),
                    floor: GRAD_FLOOR,
                });
            }
            let tan: Point4 = std::array::from_fn(|k| jet.grad[k] - radial * theta[k]);
            let ratio = norm(&tan) / radial;
            let area = r.powi(3) * (1.0 + ratio * ratio).sqrt();
            Ok([r, gn, h, area, radial, r * ratio])
        })
        .collect();
    let mut sample = LevelSetSample {
        t,
        center: *center,
        bracket,
        radius: Vec::with_capacity(quad.len()),
        grad_norm: Vec::with_capacity(quad.len()),
        mean_curv: Vec::with_capacity(quad.len()),
        area_weight: Vec::with_capacity(quad.len()),
        radial_derivative: Vec::with_capacity(quad.len()),
        tangential_grad_r: Vec::with_capacity(quad.len()),
    };
    for res in per_node {
        let [r, gn, h, a, rd, tg] = res?;
        sample.radius.push(r);
        sample.grad_norm.push(gn);
        sample.mean_curv.push(h);
        sample.area_weight.push(a);
        sample.radial_derivative.push(rd);
        sample.tangential_grad_r.push(tg);
    }
    Ok(sample)
}

fn origin_bracket(metric: &ConformalMetric) -> (f64, f64) {
    let lo = if metric.core_radius > 0.0 {
        metric.core_radius * (1.0 + 1e-6)
    } else {
        ORIGIN_R_LO
    };
    (lo, ORIGIN_R_HI)
}

/// Search radius about cone `l`.
pub fn cone_reach(metric: &ConformalMetric, l: usize) -> f64 {
    let p = &metric.cones[l].position;
    let mut d = 1.0 - norm(p);
    for (m, c) in metric.cones.iter().enumerate() {
        if m != l {
            d = d.min(distance(p, &c.position));
        }
    }
    CONE_REACH * d
}

/// Checks that u < t on each segment from the origin to an off-origin cone,
/// so every cone lies inside the component about the origin.
fn encloses_cones(metric: &ConformalMetric, t: f64) -> Result<()> {
    let lo = origin_bracket(metric).0;
    for cone in &metric.cones {
        let d = norm(&cone.position);
        if d <= lo {
            continue;
        }
        let theta = cone.position.map(|x| x / d);
        match solve_radius_jet(metric, &theta, t, &[0.0; 4], (lo, d * (1.0 - 1e-9))) {
            Err(Error::NoRoot { .. }) => {}
            Ok(_) | Err(Error::MultiRoot { .. }) | Err(Error::DegenerateGradient { .. }) => {
                return Err(Error::SplitLevel {
                    t,
                    position: cone.position,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// All components of {u = t}: one about the origin, or one about each cone.
pub fn locate_level(
    metric: &ConformalMetric,
    t: f64,
    quad: &SphericalQuadrature,
) -> Result<Vec<LevelSetSample>> {
    let origin = sample_level(metric, t, quad, &[0.0; 4], origin_bracket(metric)).and_then(|s| {
        encloses_cones(metric, t)?;
        Ok(s)
    });
    match origin {
        Ok(s) => Ok(vec![s]),
        Err(e)
            if e.is_level_gap()
                && !metric.cones.is_empty()
                && !metric.cones.iter().all(|c| norm(&c.position) == 0.0) =>
        {
            let mut comps = Vec::with_capacity(metric.cones.len());
            for (l, cone) in metric.cones.iter().enumerate() {
                let reach = cone_reach(metric, l);
                comps.push(sample_level(
                    metric,
                    t,
                    quad,
                    &cone.position,
                    (reach * 1e-13, reach),
                )?);
            }
            Ok(comps)
        }
        Err(e) => Err(e),
    }
}

/// Per-level quantities of the quasi-local mass.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelQuantities {
    pub t: f64,
    pub z: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub m: f64,
    pub component_count: usize,
    /// ⨏ dl.
    pub area: f64,
    /// ⨏ 1/|∇u| dl.
    pub inv_grad: f64,
    /// ⨏ |σ₁(Ã)||∇u| dl.
    pub abs_sigma1_tilde_grad: f64,
}

impl LevelQuantities {
    /// (1/5)[z⁴/4 + (2/9)zP + z³/3 + P/3 − C], equal to `m` when D = P/2 + z³/2.
    pub fn m_expanded(&self) -> f64 {
        let (z, p) = (self.z, self.p);
        0.2 * (0.25 * z.powi(4) + (2.0 / 9.0) * z * p + z.powi(3) / 3.0 + p / 3.0 - self.c)
    }
}

/// m = (1/5)[(2/3)D + (4/9)Dz + z⁴/36 − C].
pub fn quasi_local_mass(z: f64, d: f64, c: f64) -> f64 {
    0.2 * ((2.0 / 3.0) * d + (4.0 / 9.0) * d * z + z.powi(4) / 36.0 - c)
}

/// Level-set quantities from located components and the sublevel volumes B, A.
pub fn level_quantities(
    comps: &[LevelSetSample],
    quad: &SphericalQuadrature,
    volume_b: f64,
    volume_a: f64,
) -> Result<LevelQuantities> {
    let first = comps
        .first()
        .ok_or_else(|| Error::InvalidInput("level has no components".into()))?;
    let t = first.t;
    let sum = |f: &dyn Fn(&LevelSetSample, usize) -> f64| -> f64 {
        let parts: Vec<f64> = comps.iter().map(|c| c.average(quad, |i| f(c, i))).collect();
        pairwise_sum(&parts)
    };
    let z3 = sum(&|c, i| c.grad_norm[i].powi(3));
    assert!(z3 >= 0.0, "negative |grad u|^3 average {z3}");
    let z = z3.cbrt();
    let p = sum(&|c, i| c.mean_curv[i] * c.grad_norm[i].powi(2));
    let d = 0.5 * p + 0.5 * z3;
    let c = (4.0 * t).exp() * volume_b;
    let area = sum(&|_, _| 1.0);
    let inv_grad = sum(&|c, i| 1.0 / c.grad_norm[i]);
    let abs_s1 = sum(&|c, i| {
        let g = c.grad_norm[i];
        (c.mean_curv[i] * g + 1.5 * g * g).abs() * g
    });
    Ok(LevelQuantities {
        t,
        z,
        p,
        d,
        c,
        a: volume_a,
        b: volume_b,
        m: quasi_local_mass(z, d, c),
        component_count: comps.len(),
        area,
        inv_grad,
        abs_sigma1_tilde_grad: abs_s1,
    })
}

/// Panels in τ = log(r/ρ) for radial integrals over [0, r]: fine near the
/// level set, geometric towards the center.
fn tau_panels() -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    let mut e = 1e-3;
    while e < 40.0 {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(40.0);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// ⨏ ∫₀^{r(θ)} w(ρ) ρ³ dρ for one component, with w evaluated at center + ρθ.
fn radial_integral<F>(
    metric: &ConformalMetric,
    comp: &LevelSetSample,
    quad: &SphericalQuadrature,
    weight: F,
) -> Result<f64>
where
    F: Fn(&Point4) -> Result<f64> + Sync,
{
    let (gx, gw) = gauss_legendre(8);
    let panels = tau_panels();
    // Below these radii the point is indistinguishable from the center in
    // floating point, or lies in the excluded core; the omitted volume is negligible.
    let floor = if norm(&comp.center) == 0.0 {
        metric.core_radius * (1.0 + 1e-6)
    } else {
        1e-12 * norm(&comp.center)
    };
    let per_dir: Vec<Result<f64>> = quad
        .nodes
        .par_iter()
        .zip(comp.radius.par_iter())
        .map(|(theta, &r)| {
            let mut terms = Vec::with_capacity(panels.len() * gx.len());
            for &(a, b) in &panels {
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                for (x, w) in gx.iter().zip(&gw) {
                    let tau = mid + half * x;
                    let rho = r * (-tau).exp();
                    if rho <= floor {
                        continue;
                    }
                    let val = weight(&axpy(&comp.center, rho, theta))?;
                    terms.push(w * half * val * rho.powi(4));
                }
            }
            Ok(pairwise_sum(&terms))
        })
        .collect();
    let vals: Vec<f64> = per_dir.into_iter().collect::<Result<_>>()?;
    Ok(quad.average(&vals))
}

/// B(t) = ⨏_{S³} r⁴/4 summed over components.
pub fn volume_b(comps: &[LevelSetSample], quad: &SphericalQuadrature) -> f64 {
    let parts: Vec<f64> = comps
        .iter()
        .map(|c| {
            let v: Vec<f64> = c.radius.iter().map(|r| 0.25 * r.powi(4)).collect();
            quad.average(&v)
        })
        .collect();
    pairwise_sum(&parts)
}

/// A(t) = ⨏_{S(t)} e^{4u} dx by radial Gauss–Legendre along each node ray.
/// The excluded core of a metric (if any) is omitted.
pub fn volume_a(
    metric: &ConformalMetric,
    comps: &[LevelSetSample],
    quad: &SphericalQuadrature,
) -> Result<f64> {
    let parts: Vec<f64> = comps
        .iter()
        .map(|c| radial_integral(metric, c, quad, |x| Ok((4.0 * metric.value(x)?).exp())))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&parts))
}

/// B(t) for the sublevel set {u < t}.
pub fn volume_of_sublevel(
    metric: &ConformalMetric,
    t: f64,
    quad: &SphericalQuadrature,
) -> Result<f64> {
    Ok(volume_b(&locate_level(metric, t, quad)?, quad))
}

/// Full evaluation of one level.
pub fn evaluate_level(
    metric: &ConformalMetric,
    t: f64,
    quad: &SphericalQuadrature,
) -> Result<(Vec<LevelSetSample>, LevelQuantities)> {
    let comps = locate_level(metric, t, quad)?;
    let b = volume_b(&comps, quad);
    let a = volume_a(metric, &comps, quad)?;
    let q = level_quantities(&comps, quad, b, a)?;
    Ok((comps, q))
}

/// An interval of levels that could not be represented as star-shaped graphs.
#[derive(Debug, Clone, Serialize)]
pub struct Gap {
    pub t_lo: f64,
    pub t_hi: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassProfile {
    pub rows: Vec<LevelQuantities>,
    pub metric: String,
    pub quadrature: String,
    pub gaps: Vec<Gap>,
}

/// m(t) over `t_list`; topology-transition levels become gaps.
pub fn mass_profile(
    metric: &ConformalMetric,
    t_list: &[f64],
    quad: &SphericalQuadrature,
) -> Result<MassProfile> {
    let mut ts = t_list.to_vec();
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("levels must be finite".into()));
    }
    ts.sort_by(|a, b| a.total_cmp(b));
    ts.dedup();
    let results: Vec<Result<LevelQuantities>> = ts
        .par_iter()
        .map(|&t| evaluate_level(metric, t, quad).map(|(_, q)| q))
        .collect();
    let mut rows = Vec::new();
    let mut gaps: Vec<Gap> = Vec::new();
    let mut open = false;
    for (&t, res) in ts.iter().zip(results) {
        match res {
            Ok(q) => {
                rows.push(q);
                open = false;
            }
            Err(e) if e.is_level_gap() => {
                match gaps.last_mut() {
                    Some(g) if open => g.t_hi = t,
                    _ => gaps.push(Gap {
                        t_lo: t,
                        t_hi: t,
                        reason: e.to_string(),
                    }),
                }
                open = true;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(MassProfile {
        rows,
        metric: metric.descriptor.clone(),
        quadrature: quad.describe(),
        gaps,
    })
}

impl MassProfile {
    /// CSV with columns t, z, P, D, C, A, B, m, component_count (17 significant
    /// digits) followed by `# gap t_lo t_hi reason` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,z,P,D,C,A,B,m,component_count")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.t, r.z, r.p, r.d, r.c, r.a, r.b, r.m, r.component_count
            )?;
        }
        writeln!(out, "# metric {}", self.metric)?;
        writeln!(out, "# quadrature {}", self.quadrature)?;
        for g in &self.gaps {
            writeln!(
                out,
                "# gap {:.16e} {:.16e} {}",
                g.t_lo,
                g.t_hi,
                g.reason.replace('\n', " ")
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub min_difference: f64,
    pub worst_pair: (f64, f64),
    /// Every adjacent difference is strictly positive.
    pub strictly_increasing: bool,
    pub tol: f64,
    pub pass: bool,
}

/// Worst adjacent difference m_{i+1} − m_i; pass iff it is ≥ −tol.
pub fn monotonicity_check(profile: &MassProfile, tol: f64) -> Result<MonotonicityReport> {
    if profile.rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "monotonicity needs at least 2 levels, got {}",
            profile.rows.len()
        )));
    }
    let mut min = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    for w in profile.rows.windows(2) {
        let d = w[1].m - w[0].m;
        if d < min {
            min = d;
            worst = (w[0].t, w[1].t);
        }
    }
    Ok(MonotonicityReport {
        min_difference: min,
        worst_pair: worst,
        strictly_increasing: min > 0.0,
        tol,
        pass: min >= -tol,
    })
}

/// Relative discrepancy |a − b| / max(|a|, |b|, tiny).
fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoareaReport {
    pub t: f64,
    pub dt: f64,
    /// Five-point centered difference of A against e^{4t}⨏1/|∇u|.
    pub a_prime_fd: f64,
    pub a_prime_level: f64,
    pub a_prime_rel: f64,
    /// Five-point centered difference of B against ⨏1/|∇u|.
    pub b_prime_fd: f64,
    pub b_prime_level: f64,
    pub b_prime_rel: f64,
    /// Five-point centered difference of C against 4C + A′.
    pub c_prime_fd: f64,
    pub c_prime_identity: f64,
    pub c_prime_rel: f64,
    /// D(t + dt) − D(t − dt) against ⨏_{shell} σ₂ e^{4u} dx.
    pub d_difference: f64,
    pub d_shell_integral: f64,
    pub d_rel: f64,
    /// [D] − (3/2)[A] over the shell; non-negative when σ₂ ≥ 3/2.
    pub d_minus_three_halves_a: f64,
    pub a_difference: f64,
    /// 4C ≤ (1/3)(2zA′ + (2/3)z′⨏|σ₁(Ã)||∇u|), with A′ and z′ by differences.
    pub am_gm_lhs: f64,
    pub am_gm_rhs: f64,
    pub max_rel: f64,
}

/// Co-area and divergence identities at level t from levels t ± dt, t ± 2dt.
pub fn coarea_checks(
    metric: &ConformalMetric,
    t: f64,
    quad: &SphericalQuadrature,
    dt: f64,
) -> Result<CoareaReport> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let (_, q_lo2) = evaluate_level(metric, t - 2.0 * dt, quad)?;
    let (c_lo, q_lo) = evaluate_level(metric, t - dt, quad)?;
    let (_, q) = evaluate_level(metric, t, quad)?;
    let (c_hi, q_hi) = evaluate_level(metric, t + dt, quad)?;
    let (_, q_hi2) = evaluate_level(metric, t + 2.0 * dt, quad)?;
    if c_lo.len() != c_hi.len() {
        return Err(Error::MultiRoot {
            t,
            crossings: c_hi.len(),
        });
    }
    // Fourth-order centered difference.
    let deriv = |f: &dyn Fn(&LevelQuantities) -> f64| {
        (8.0 * (f(&q_hi) - f(&q_lo)) - (f(&q_hi2) - f(&q_lo2))) / (12.0 * dt)
    };
    let a_fd = deriv(&|r| r.a);
    let a_lvl = (4.0 * t).exp() * q.inv_grad;
    let b_fd = deriv(&|r| r.b);
    let b_lvl = q.inv_grad;
    let c_fd = deriv(&|r| r.c);
    let c_id = 4.0 * q.c + a_lvl;
    let d_diff = q_hi.d - q_lo.d;
    let mut shell = 0.0;
    for (lo, hi) in c_lo.iter().zip(&c_hi) {
        shell += shell_integral(metric, lo, hi, quad)?;
    }
    let z_prime = deriv(&|r| r.z);
    let am_rhs = (2.0 * q.z * a_fd + (2.0 / 3.0) * z_prime * q.abs_sigma1_tilde_grad) / 3.0;
    let (ar, br, cr, dr) = (
        rel(a_fd, a_lvl),
        rel(b_fd, b_lvl),
        rel(c_fd, c_id),
        rel(d_diff, shell),
    );
    Ok(CoareaReport {
        t,
        dt,
        a_prime_fd: a_fd,
        a_prime_level: a_lvl,
        a_prime_rel: ar,
        b_prime_fd: b_fd,
        b_prime_level: b_lvl,
        b_prime_rel: br,
        c_prime_fd: c_fd,
        c_prime_identity: c_id,
        c_prime_rel: cr,
        d_difference: d_diff,
        d_shell_integral: shell,
        d_rel: dr,
        d_minus_three_halves_a: d_diff - 1.5 * (q_hi.a - q_lo.a),
        a_difference: q_hi.a - q_lo.a,
        am_gm_lhs: 4.0 * q.c,
        am_gm_rhs: am_rhs,
        max_rel: ar.max(br).max(cr).max(dr),
    })
}

/// ⨏ ∫_{r_lo(θ)}^{r_hi(θ)} σ₂ e^{4u} ρ³ dρ between two samples of one component.
fn shell_integral(
    metric: &ConformalMetric,
    lo: &LevelSetSample,
    hi: &LevelSetSample,
    quad: &SphericalQuadrature,
) -> Result<f64> {
    let (gx, gw) = gauss_legendre(16);
    let per_dir: Vec<Result<f64>> = (0..quad.len())
        .into_par_iter()
        .map(|i| {
            let (a, b) = (lo.radius[i], hi.radius[i]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let mut terms = Vec::with_capacity(gx.len());
            for (x, w) in gx.iter().zip(&gw) {
                let rho = mid + half * x;
                let jet = metric.jet(&axpy(&lo.center, rho, &quad.nodes[i]))?;
                let s2 = sigma_k(&jet, 2)?;
                terms.push(w * half * s2 * (4.0 * jet.value).exp() * rho.powi(3));
            }
            Ok(pairwise_sum(&terms))
        })
        .collect();
    let vals: Vec<f64> = per_dir.into_iter().collect::<Result<_>>()?;
    Ok(quad.average(&vals))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsoperimetricCheck {
    pub t: f64,
    /// (⨏dl)⁴.
    pub lhs: f64,
    /// 64 B³ (equality for round spheres).
    pub rhs: f64,
    pub holds: bool,
}

/// Sharp isoperimetric inequality in normalized units, (⨏dl)⁴ ≥ 64B³,
/// with relative slack 1e−10.
pub fn isoperimetric_check(q: &LevelQuantities) -> IsoperimetricCheck {
    let lhs = q.area.powi(4);
    let rhs = 64.0 * q.b.powi(3);
    IsoperimetricCheck {
        t: q.t,
        lhs,
        rhs,
        holds: lhs - rhs >= -1e-10 * rhs,
    }
}

/// Levels t = s − log sinh s for `n` values of s log-spaced from `s_hi` down to `s_lo`.
pub fn boundary_levels(n: usize, s_hi: f64, s_lo: f64) -> Vec<f64> {
    log_space(s_hi, s_lo, n)
        .into_iter()
        .map(|s| s - s.sinh().ln())
        .collect()
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

const PROBE_DIRECTION: Point4 = [0.5, 0.5, 0.5, 0.5];

/// `n` levels on the singular side: cone components with ρ from 1e−3 down to
/// 1e−7 (the t-window shared by all cones), or small spheres r ∈ [0.01, 0.05]
/// about the origin when there are no cones.
pub fn singular_levels(metric: &ConformalMetric, n: usize) -> Result<Vec<f64>> {
    let mut ts = Vec::with_capacity(n);
    if metric.cones.is_empty() {
        for r in log_space(0.05, 0.01, n) {
            ts.push(metric.value(&axpy(&[0.0; 4], r, &PROBE_DIRECTION))?);
        }
    } else {
        let mut t_hi = f64::INFINITY;
        let mut t_lo = f64::NEG_INFINITY;
        for c in &metric.cones {
            t_hi = t_hi.min(metric.value(&axpy(&c.position, 1e-3, &PROBE_DIRECTION))?);
            t_lo = t_lo.max(metric.value(&axpy(&c.position, 1e-7, &PROBE_DIRECTION))?);
        }
        if !(t_lo < t_hi) {
            t_lo = t_hi - 1.0;
        }
        for i in 0..n {
            let f = if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            };
            ts.push(t_hi + (t_lo - t_hi) * f);
        }
    }
    ts.sort_by(|a, b| a.total_cmp(b));
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::make_hyperbolic;

    #[test]
    fn hyperbolic_radius_and_mass() {
        let m = make_hyperbolic();
        let q = SphericalQuadrature::product(5).unwrap();
        let t = m.value(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        let r = solve_radius(&m, &q.nodes[3], t, &[0.0; 4], (1e-9, 1.0 - 1e-9)).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        let (comps, lq) = evaluate_level(&m, t, &q).unwrap();
        assert_eq!(comps.len(), 1);
        assert!(lq.m.abs() < 1e-10, "m = {}", lq.m);
        assert!((lq.b - 0.5f64.powi(4) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn constant_factor_has_no_root() {
        let m = ConformalMetric::from_fn(|_| Ok(1.0), vec![], None, "constant").unwrap();
        let r = solve_radius(&m, &[1.0, 0.0, 0.0, 0.0], 0.5, &[0.0; 4], (0.1, 0.9));
        assert!(matches!(r, Err(Error::NoRoot { .. })));
    }

    #[test]
    fn scan_is_sorted_and_spans_bracket() {
        let r = scan_radii(1e-9, 0.999);
        assert!(r.len() >= 60);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r[0], 1e-9);
        assert!((r[r.len() - 1] - 0.999).abs() < 1e-12);
    }

    #[test]
    fn reversed_profile_fails_monotonicity() {
        let row = |t: f64, m: f64| LevelQuantities {
            t,
            z: 0.0,
            p: 0.0,
            d: 0.0,
            c: 0.0,
            a: 0.0,
            b: 0.0,
            m,
            component_count: 1,
            area: 0.0,
            inv_grad: 0.0,
            abs_sigma1_tilde_grad: 0.0,
        };
        let prof = MassProfile {
            rows: vec![row(0.0, 0.3), row(1.0, 0.2), row(2.0, 0.1)],
            metric: String::new(),
            quadrature: String::new(),
            gaps: vec![],
        };
        let rep = monotonicity_check(&prof, 1e-6).unwrap();
        assert!(!rep.pass);
        assert!((rep.min_difference + 0.1).abs() < 1e-15);
    }
}

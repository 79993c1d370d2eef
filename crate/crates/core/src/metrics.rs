//! Conformal metrics g = e^{2u} g_E on the punctured unit 4-disc and the
//! built-in families with analytic jets.
//!
//! | family          | conformal factor u                                                   |
//! |-----------------|----------------------------------------------------------------------|
//! | `hyperbolic`    | s − log sinh s = log(2/(1 − r²))                                     |
//! | `chy`           | v(s) + s with v the Chang–Han–Yang profile                            |
//! | `rotsym_sigma2` | v(s) + s with (v_s² − 1)v_ss = c(s)e^{4v}                             |
//! | `perturbed_ah`  | s − log sinh s + η(r)s⁴f(θ)                                           |
//! | `multi_cone`    | Σ β_l χ(r) log|x − p_l| + s − log sinh s + η(r)s⁴f(θ)                 |
//!
//! with s = log(1/r), f(θ) = a₀ + Σ aᵢθⁱ, η a C² ramp from 0 (r ≤ 0.5) to 1
//! (r ≥ 0.8) and χ a C² cutoff equal to 1 on [0, r₁] and 0 on [r₂, 1).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chy::{self, CProfile, RadialSolution};
use crate::dual::Dual2;
use crate::error::{Error, Result};
use crate::geometry::{default_fd_step, distance, finite_difference_jet, norm, Jet2, Point4};

/// Version of the metric JSON format.
pub const SCHEMA_VERSION: u32 = 1;

/// Radial range on which ODE-backed families are solved; below `ODE_S_START`
/// the boundary expansion is used directly.
pub const ODE_S_START: f64 = 1e-4;
pub const ODE_S_END: f64 = 18.0;
pub const ODE_TOL: f64 = 1e-12;

/// Points closer than this to the origin are outside the domain of `perturbed_ah`.
pub const PERTURBED_CORE: f64 = 1e-3;

const RAMP_LO: f64 = 0.5;
const RAMP_HI: f64 = 0.8;
const CONE_MARGIN: f64 = 0.05;
/// Cutoff ramps have width 0.3; their fourth derivatives set this scale.
const FEATURE_LENGTH: f64 = 0.1;

/// Pointwise evaluator of the conformal factor.
pub trait ConformalFactor: Send + Sync {
    fn value(&self, x: &Point4) -> Result<f64>;
    fn jet(&self, x: &Point4) -> Result<Jet2>;
}

/// A cone-like singularity u ~ β log|x − p|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub position: Point4,
    pub beta: f64,
}

/// Boundary profile f(θ) of the expansion u = s − log sinh s + s⁴f(θ) + o(s⁴).
#[derive(Clone)]
pub enum BoundaryProfile {
    /// f(θ) = a₀ + a₁θ¹ + a₂θ² + a₃θ³ + a₄θ⁴.
    Linear([f64; 5]),
    /// Arbitrary callable; quadrature convergence of m₂ is not guaranteed.
    Custom(Arc<dyn Fn(&Point4) -> f64 + Send + Sync>),
}

impl BoundaryProfile {
    pub fn constant(a0: f64) -> Self {
        BoundaryProfile::Linear([a0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn eval(&self, theta: &Point4) -> f64 {
        match self {
            BoundaryProfile::Linear(a) => {
                a[0] + a[1] * theta[0] + a[2] * theta[1] + a[3] * theta[2] + a[4] * theta[3]
            }
            BoundaryProfile::Custom(f) => f(theta),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, BoundaryProfile::Linear(_))
    }
}

impl fmt::Debug for BoundaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryProfile::Linear(a) => f.debug_tuple("Linear").field(a).finish(),
            BoundaryProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A conformal metric on the punctured disc with its singular and boundary data.
#[derive(Clone)]
pub struct ConformalMetric {
    factor: Arc<dyn ConformalFactor>,
    pub cones: Vec<Cone>,
    pub boundary_f: Option<BoundaryProfile>,
    /// True when jets are exact (automatic differentiation or closed form).
    pub analytic: bool,
    /// Radius of a ball about the origin excluded from the domain (0 if none).
    pub core_radius: f64,
    /// Length scale of built-in cutoffs; caps the finite-difference step.
    pub feature_length: f64,
    pub descriptor: String,
    pub spec: Option<MetricSpec>,
    pub warnings: Vec<String>,
}

impl fmt::Debug for ConformalMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalMetric")
            .field("descriptor", &self.descriptor)
            .field("cones", &self.cones)
            .field("boundary_f", &self.boundary_f)
            .field("analytic", &self.analytic)
            .finish()
    }
}

struct FnFactor<F> {
    u: F,
    cones: Vec<Cone>,
}

impl<F> ConformalFactor for FnFactor<F>
where
    F: Fn(&Point4) -> Result<f64> + Send + Sync,
{
    fn value(&self, x: &Point4) -> Result<f64> {
        (self.u)(x)
    }

    fn jet(&self, x: &Point4) -> Result<Jet2> {
        let h = default_fd_step(singular_distance(x, &self.cones, 0.0));
        finite_difference_jet(&self.u, x, h)
    }
}

fn singular_distance(x: &Point4, cones: &[Cone], core: f64) -> f64 {
    let mut d = 1.0 - norm(x);
    for c in cones {
        d = d.min(distance(x, &c.position));
    }
    if core > 0.0 {
        d = d.min(norm(x) - core);
    }
    d
}

impl ConformalMetric {
    /// Metric from a user-supplied conformal factor; jets by central differences.
    pub fn from_fn<F>(
        u: F,
        cones: Vec<Cone>,
        boundary_f: Option<BoundaryProfile>,
        descriptor: &str,
    ) -> Result<Self>
    where
        F: Fn(&Point4) -> Result<f64> + Send + Sync + 'static,
    {
        validate_cones(&cones, 1.0)?;
        let mut warnings = vec![
            "jets by finite differences; boundary radial decay of h is not controlled for user metrics".to_string(),
        ];
        if let Some(BoundaryProfile::Custom(_)) = &boundary_f {
            warnings.push(
                "boundary profile is not a degree <= 1 polynomial: convergence not guaranteed"
                    .into(),
            );
        }
        Ok(Self {
            factor: Arc::new(FnFactor {
                u,
                cones: cones.clone(),
            }),
            cones,
            boundary_f,
            analytic: false,
            core_radius: 0.0,
            feature_length: f64::INFINITY,
            descriptor: descriptor.to_string(),
            spec: None,
            warnings,
        })
    }

    fn check_point(&self, x: &Point4) -> Result<()> {
        if !x.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite point {x:?}")));
        }
        let r = norm(x);
        if r >= 1.0 {
            return Err(Error::Domain(format!(
                "|x| = {r} is not inside the unit disc"
            )));
        }
        if self.core_radius > 0.0 && r <= self.core_radius {
            return Err(Error::Domain(format!(
                "|x| = {r} is inside the excluded core of radius {}",
                self.core_radius
            )));
        }
        for c in &self.cones {
            if distance(x, &c.position) == 0.0 {
                return Err(Error::Domain(format!("x = {x:?} is a cone point")));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &Point4) -> Result<f64> {
        self.check_point(x)?;
        self.factor.value(x)
    }

    pub fn jet(&self, x: &Point4) -> Result<Jet2> {
        self.check_point(x)?;
        self.factor.jet(x)
    }

    /// Central-difference jet of the same factor (independent of `jet`).
    pub fn fd_jet(&self, x: &Point4) -> Result<Jet2> {
        self.check_point(x)?;
        let h = default_fd_step(self.singular_distance(x).min(self.feature_length));
        finite_difference_jet(|y| self.value(y), x, h)
    }

    /// Distance to the nearest singular set: disc boundary, cone points, excluded core.
    pub fn singular_distance(&self, x: &Point4) -> f64 {
        singular_distance(x, &self.cones, self.core_radius)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.cones.iter().map(|c| c.beta).collect()
    }
}

fn validate_cones(cones: &[Cone], max_radius: f64) -> Result<()> {
    for (i, c) in cones.iter().enumerate() {
        if !(c.beta > 0.0) || !c.beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cone {i}: beta must be positive, got {}",
                c.beta
            )));
        }
        if !c.position.iter().all(|v| v.is_finite()) || norm(&c.position) >= max_radius {
            return Err(Error::InvalidInput(format!(
                "cone {i}: position {:?} must satisfy |p| < {max_radius}",
                c.position
            )));
        }
        for (j, d) in cones.iter().enumerate().take(i) {
            if distance(&c.position, &d.position) == 0.0 {
                return Err(Error::InvalidInput(format!("cones {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

/// Family parameters of a [`MetricSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Hyperbolic,
    /// Exactly one of `beta`, `k`.
    Chy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
    },
    RotsymSigma2 {
        c: CProfile,
        f_seed: f64,
    },
    PerturbedAh {
        a: [f64; 5],
    },
    MultiCone {
        cones: Vec<Cone>,
        #[serde(default)]
        a: [f64; 5],
        #[serde(default = "default_r1")]
        r1: f64,
        #[serde(default = "default_r2")]
        r2: f64,
    },
}

fn default_r1() -> f64 {
    0.3
}

fn default_r2() -> f64 {
    0.8
}

/// Serializable metric description: `{"schema": 1, "family": ..., <parameters>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub schema: u32,
    #[serde(flatten)]
    pub family: Family,
}

impl MetricSpec {
    pub fn new(family: Family) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            family,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MetricSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("metric spec: {e}")))?;
        if spec.schema != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported metric schema {} (expected {SCHEMA_VERSION})",
                spec.schema
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metric spec serializes")
    }

    /// Named presets used by the command line.
    pub fn preset(name: &str) -> Option<Self> {
        let family = match name {
            "hyperbolic" => Family::Hyperbolic,
            "chy" | "chy-beta1" => Family::Chy {
                beta: Some(1.0),
                k: None,
            },
            "rotsym-decay" => Family::RotsymSigma2 {
                c: CProfile::ExpDecay {
                    amplitude: 0.5,
                    rate: 1.0,
                    onset: 0.5,
                },
                f_seed: -1.0,
            },
            "rotsym-c1.2" => Family::RotsymSigma2 {
                c: CProfile::Constant {
                    value: 1.2,
                    onset: 0.0,
                },
                f_seed: -0.45,
            },
            "perturbed" => Family::PerturbedAh {
                a: [0.3, 0.1, 0.0, 0.0, 0.0],
            },
            "multicone" => Family::MultiCone {
                cones: vec![
                    Cone {
                        position: [0.1, 0.0, 0.0, 0.0],
                        beta: 0.5,
                    },
                    Cone {
                        position: [-0.1, 0.0, 0.0, 0.0],
                        beta: 1.0,
                    },
                ],
                a: [0.0; 5],
                r1: 0.3,
                r2: 0.8,
            },
            _ => return None,
        };
        Some(Self::new(family))
    }

    pub const PRESETS: [&'static str; 6] = [
        "hyperbolic",
        "chy-beta1",
        "rotsym-decay",
        "rotsym-c1.2",
        "perturbed",
        "multicone",
    ];

    pub fn build(&self) -> Result<ConformalMetric> {
        let mut metric = match &self.family {
            Family::Hyperbolic => make_hyperbolic(),
            Family::Chy { beta, k } => {
                let k = match (beta, k) {
                    (Some(b), None) => chy::k_of_beta(*b)?,
                    (None, Some(k)) => {
                        chy::beta_of_k(*k)?;
                        *k
                    }
                    _ => {
                        return Err(Error::InvalidInput(
                            "chy needs exactly one of beta, k".into(),
                        ))
                    }
                };
                make_chy_k(k)?
            }
            Family::RotsymSigma2 { c, f_seed } => make_rotsym_sigma2(*c, *f_seed)?,
            Family::PerturbedAh { a } => make_perturbed_ah(*a)?,
            Family::MultiCone { cones, a, r1, r2 } => make_multicone(cones.clone(), *a, *r1, *r2)?,
        };
        metric.spec = Some(self.clone());
        Ok(metric)
    }
}

fn hyperbolic_dual(c: &[Dual2; 4]) -> Dual2 {
    let r2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3];
    -(Dual2::constant(1.0) - r2).ln() + std::f64::consts::LN_2
}

fn hyperbolic_value(x: &Point4) -> f64 {
    let r2 = x.iter().map(|v| v * v).sum::<f64>();
    std::f64::consts::LN_2 - (-r2).ln_1p()
}

struct Hyperbolic;

impl ConformalFactor for Hyperbolic {
    fn value(&self, x: &Point4) -> Result<f64> {
        Ok(hyperbolic_value(x))
    }

    fn jet(&self, x: &Point4) -> Result<Jet2> {
        Ok(hyperbolic_dual(&Dual2::coordinates(x)).to_jet())
    }
}

/// Hyperbolic 4-space: u = s − log sinh s = log(2/(1 − r²)).
pub fn make_hyperbolic() -> ConformalMetric {
    ConformalMetric {
        factor: Arc::new(Hyperbolic),
        cones: Vec::new(),
        boundary_f: Some(BoundaryProfile::constant(0.0)),
        analytic: true,
        core_radius: 0.0,
        feature_length: f64::INFINITY,
        descriptor: "hyperbolic".into(),
        spec: Some(MetricSpec::new(Family::Hyperbolic)),
        warnings: Vec::new(),
    }
}

/// Radial factor u(r) = v(log 1/r) + log 1/r backed by an ODE solution.
struct RadialOde {
    sol: RadialSolution,
}

impl RadialOde {
    fn state(&self, x: &Point4) -> Result<(f64, chy::RadialState)> {
        let r = norm(x);
        let st = self.sol.state_at(-r.ln())?;
        Ok((r, st))
    }
}

impl ConformalFactor for RadialOde {
    fn value(&self, x: &Point4) -> Result<f64> {
        let (_, st) = self.state(x)?;
        Ok(st.v + st.s)
    }

    fn jet(&self, x: &Point4) -> Result<Jet2> {
        let (r, st) = self.state(x)?;
        let u_r = -(st.v_s + 1.0) / r;
        let u_rr = (st.v_ss + st.v_s + 1.0) / (r * r);
        Ok(Jet2::radial(st.v + st.s, x, u_r, u_rr))
    }
}

fn radial_metric(
    sol: RadialSolution,
    beta: f64,
    boundary_f: Option<BoundaryProfile>,
    descriptor: String,
) -> ConformalMetric {
    let cones = if beta > 1e-6 {
        vec![Cone {
            position: [0.0; 4],
            beta,
        }]
    } else {
        Vec::new()
    };
    ConformalMetric {
        factor: Arc::new(RadialOde { sol }),
        cones,
        boundary_f,
        analytic: true,
        core_radius: 0.0,
        feature_length: f64::INFINITY,
        descriptor,
        spec: None,
        warnings: Vec::new(),
    }
}

/// CHY metric with cone parameter β ≥ 0 (k = β(β + 2)).
pub fn make_chy(beta: f64) -> Result<ConformalMetric> {
    let k = chy::k_of_beta(beta)?;
    let mut m = make_chy_k(k)?;
    m.spec = Some(MetricSpec::new(Family::Chy {
        beta: Some(beta),
        k: None,
    }));
    Ok(m)
}

/// CHY metric with first-integral constant k ≥ 0.
pub fn make_chy_k(k: f64) -> Result<ConformalMetric> {
    let sol = chy::solve_chy(k, ODE_S_START, ODE_S_END, ODE_TOL)?;
    let beta = sol.beta;
    let mut m = radial_metric(
        sol.radial,
        beta,
        Some(BoundaryProfile::constant(-k * k / 20.0)),
        format!("chy k={k} beta={beta}"),
    );
    m.spec = Some(MetricSpec::new(Family::Chy {
        beta: None,
        k: Some(k),
    }));
    Ok(m)
}

/// Radial metric with σ₂ = (3/2)c(s); the cone strength is read off the profile.
pub fn make_rotsym_sigma2(c: CProfile, f_seed: f64) -> Result<ConformalMetric> {
    let sol = chy::solve_rotsym_sigma2(c, f_seed, ODE_S_START, ODE_S_END, ODE_TOL)?;
    let beta = sol.beta_estimate();
    let normalized = sol.is_ah_normalized();
    let mut warnings = Vec::new();
    let boundary_f = if normalized {
        Some(BoundaryProfile::constant(f_seed))
    } else {
        warnings.push(format!(
            "c(s0) = {} != 1: the seed was rescaled and the metric is not AH-normalized, so f_seed is not its sigma2 mass",
            c.eval(ODE_S_START)
        ));
        None
    };
    if !sol.cone_conditions_hold() {
        warnings.push("negative-cone conditions v_s^2 > 1, v_ss > 0 fail at some node".into());
    }
    let mut m = radial_metric(
        sol.radial,
        beta,
        boundary_f,
        format!("rotsym_sigma2 c={c:?} f_seed={f_seed} beta~{beta:.6}"),
    );
    m.warnings = warnings;
    m.spec = Some(MetricSpec::new(Family::RotsymSigma2 { c, f_seed }));
    Ok(m)
}

/// C² quintic step: 0 for t ≤ 0, 1 for t ≥ 1, as (value, d/dt, d²/dt²).
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
        )
    }
}

/// η(r)s⁴f(θ) in dual arithmetic; `r` must be positive.
fn boundary_term(c: &[Dual2; 4], a: &[f64; 5]) -> Dual2 {
    let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
    if r.v <= RAMP_LO || a.iter().all(|&v| v == 0.0) {
        return Dual2::constant(0.0);
    }
    let w = RAMP_HI - RAMP_LO;
    let (e, de, d2e) = smoothstep((r.v - RAMP_LO) / w);
    let eta = r.chain(e, de / w, d2e / (w * w));
    let s = -r.ln();
    let mut f = Dual2::constant(a[0]);
    for i in 0..4 {
        if a[i + 1] != 0.0 {
            f = f + (c[i] / r) * a[i + 1];
        }
    }
    eta * s.powi(4) * f
}

fn boundary_value(x: &Point4, a: &[f64; 5]) -> f64 {
    let r = norm(x);
    if r <= RAMP_LO || a.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let (e, _, _) = smoothstep((r - RAMP_LO) / (RAMP_HI - RAMP_LO));
    let s = -r.ln();
    let f = a[0] + (0..4).map(|i| a[i + 1] * x[i] / r).sum::<f64>();
    e * s.powi(4) * f
}

struct PerturbedAh {
    a: [f64; 5],
}

impl ConformalFactor for PerturbedAh {
    fn value(&self, x: &Point4) -> Result<f64> {
        Ok(hyperbolic_value(x) + boundary_value(x, &self.a))
    }

    fn jet(&self, x: &Point4) -> Result<Jet2> {
        let c = Dual2::coordinates(x);
        Ok((hyperbolic_dual(&c) + boundary_term(&c, &self.a)).to_jet())
    }
}

/// u = s − log sinh s + η(r)s⁴(a₀ + Σ aᵢθⁱ), h = 0 for r ≥ 0.8.
pub fn make_perturbed_ah(a: [f64; 5]) -> Result<ConformalMetric> {
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite boundary coefficients {a:?}"
        )));
    }
    Ok(ConformalMetric {
        factor: Arc::new(PerturbedAh { a }),
        cones: Vec::new(),
        boundary_f: Some(BoundaryProfile::Linear(a)),
        analytic: true,
        core_radius: PERTURBED_CORE,
        feature_length: FEATURE_LENGTH,
        descriptor: format!("perturbed_ah a={a:?}"),
        spec: Some(MetricSpec::new(Family::PerturbedAh { a })),
        warnings: Vec::new(),
    })
}

struct MultiCone {
    cones: Vec<Cone>,
    a: [f64; 5],
    r1: f64,
    r2: f64,
}

impl MultiCone {
    fn cutoff(&self, r: f64) -> (f64, f64, f64) {
        let w = self.r2 - self.r1;
        let (v, d, d2) = smoothstep((r - self.r1) / w);
        (1.0 - v, -d / w, -d2 / (w * w))
    }
}

impl ConformalFactor for MultiCone {
    fn value(&self, x: &Point4) -> Result<f64> {
        let (chi, _, _) = self.cutoff(norm(x));
        let mut u = hyperbolic_value(x) + boundary_value(x, &self.a);
        if chi != 0.0 {
            for c in &self.cones {
                u += c.beta * chi * distance(x, &c.position).ln();
            }
        }
        Ok(u)
    }

    fn jet(&self, x: &Point4) -> Result<Jet2> {
        let c = Dual2::coordinates(x);
        let mut u = hyperbolic_dual(&c) + boundary_term(&c, &self.a);
        let r = norm(x);
        if r < self.r2 {
            let rd = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
            let chi = if r <= self.r1 {
                Dual2::constant(1.0)
            } else {
                let (v, d, d2) = self.cutoff(r);
                rd.chain(v, d, d2)
            };
            let mut logs = Dual2::constant(0.0);
            for cone in &self.cones {
                let d = [0, 1, 2, 3].map(|i| c[i] - cone.position[i]);
                let rho2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3];
                logs = logs + rho2.ln().scale(0.5 * cone.beta);
            }
            u = u + chi * logs;
        }
        Ok(u.to_jet())
    }
}

/// u = Σβ_l χ(|x|) log|x − p_l| + s − log sinh s + η(r)s⁴f(θ).
pub fn make_multicone(cones: Vec<Cone>, a: [f64; 5], r1: f64, r2: f64) -> Result<ConformalMetric> {
    if !(0.0 < r1 && r1 < r2 && r2 < 1.0) {
        return Err(Error::InvalidInput(format!(
            "cutoff radii must satisfy 0 < r1 < r2 < 1, got {r1}, {r2}"
        )));
    }
    if cones.is_empty() {
        return Err(Error::InvalidInput(
            "multi_cone needs at least one cone".into(),
        ));
    }
    validate_cones(&cones, r1 - CONE_MARGIN).map_err(|e| match e {
        Error::InvalidInput(m) => {
            Error::InvalidInput(format!("{m} (cones must lie inside r1 - {CONE_MARGIN})"))
        }
        other => other,
    })?;
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite boundary coefficients {a:?}"
        )));
    }
    let betas: Vec<f64> = cones.iter().map(|c| c.beta).collect();
    Ok(ConformalMetric {
        factor: Arc::new(MultiCone {
            cones: cones.clone(),
            a,
            r1,
            r2,
        }),
        cones: cones.clone(),
        boundary_f: Some(BoundaryProfile::Linear(a)),
        analytic: true,
        core_radius: 0.0,
        feature_length: FEATURE_LENGTH,
        descriptor: format!("multi_cone betas={betas:?}"),
        spec: Some(MetricSpec::new(Family::MultiCone { cones, a, r1, r2 })),
        warnings: vec![
            "multi-cone metrics are limit-testing devices; sigma2 >= 3/2 generally fails".into(),
        ],
    })
}

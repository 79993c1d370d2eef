//! Rotationally symmetric metrics g = e^{2v}(ds² + g_{S³}), s = log(1/r).
//!
//! σ₂(g⁻¹A_g) = (3/2)(v_s² − 1) v_ss e^{−4v}, so prescribing σ₂ = (3/2)c(s)
//! is the ODE (v_s² − 1) v_ss = c(s) e^{4v}. For c ≡ 1 (the Chang–Han–Yang
//! model) it has the first integral (v_s² − 1)² − e^{4v} = k².
//!
//! Both solvers integrate the first-order system in (v, W_c) with
//! W_c = (v_s² − 1)² − c(s) e^{4v}:
//!
//! ```text
//! v'   = −√(1 + √(W_c + c e^{4v}))        (negative branch, v_s ≤ −1)
//! W_c' = −c'(s) e^{4v}
//! ```
//!
//! so W_c is conserved exactly when c is constant. The radial mass is
//! m = W/20 with W = (v_s² − 1)² − e^{4v} = W_c + (c − 1)e^{4v}, and
//! W' = 4 v_s (c − 1) e^{4v} ≤ 0 when c ≥ 1.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Dopri5;

/// Threshold on v_s² − 1 below which the solution has left the negative cone.
pub const CONE_DELTA: f64 = 1e-8;
pub const DEFAULT_S_START: f64 = 0.05;
pub const DEFAULT_S_END: f64 = 10.0;

/// (v_s² − 1)² − e^{4v}.
pub fn first_integral(v: f64, v_s: f64) -> f64 {
    let a = v_s * v_s - 1.0;
    a * a - (4.0 * v).exp()
}

/// m(s) = first_integral / 20.
pub fn radial_mass(v: f64, v_s: f64) -> f64 {
    first_integral(v, v_s) / 20.0
}

/// Cone parameter of the CHY solution with constant k: β = √(k + 1) − 1.
pub fn beta_of_k(k: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "k must be non-negative, got {k}"
        )));
    }
    Ok((k + 1.0).sqrt() - 1.0)
}

/// Inverse of [`beta_of_k`]: k = β(β + 2).
pub fn k_of_beta(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    Ok(beta * (beta + 2.0))
}

/// σ₂ profile c(s) ≥ 1, with σ₂ = (3/2)c.
///
/// `onset > 0` switches the excess c − 1 on smoothly away from the boundary:
/// c_eff = 1 + (c − 1)(1 − exp(−(s/onset)⁶)). An AH end forces c = 1 + O(s⁵)
/// as s → 0, so profiles with c(0) > 1 need an onset to stay AH-normalized.
/// With `onset = 0` the profile is used as is and the seed is rescaled by
/// −(1/4) log c(s₀), which for constant c is the exact rescaling of CHY.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CProfile {
    Unit,
    Constant {
        value: f64,
        #[serde(default)]
        onset: f64,
    },
    ExpDecay {
        amplitude: f64,
        #[serde(default = "one")]
        rate: f64,
        #[serde(default = "default_onset")]
        onset: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_onset() -> f64 {
    0.5
}

impl CProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CProfile::Unit => true,
            CProfile::Constant { value, onset } => value >= 1.0 && onset >= 0.0,
            CProfile::ExpDecay {
                amplitude,
                rate,
                onset,
            } => amplitude >= 0.0 && rate >= 0.0 && onset >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "c-profile must satisfy c >= 1, got {self:?}"
            )))
        }
    }

    fn raw(&self, s: f64) -> f64 {
        match *self {
            CProfile::Unit => 1.0,
            CProfile::Constant { value, .. } => value,
            CProfile::ExpDecay {
                amplitude, rate, ..
            } => 1.0 + amplitude * (-rate * s).exp(),
        }
    }

    fn onset(&self) -> f64 {
        match *self {
            CProfile::Unit => 0.0,
            CProfile::Constant { onset, .. } | CProfile::ExpDecay { onset, .. } => onset,
        }
    }

    /// Effective c(s) used by the solver.
    pub fn eval(&self, s: f64) -> f64 {
        1.0 + (self.raw(s) - 1.0) * self.ramp(s).0
    }

    /// dc/ds of the effective profile.
    pub fn derivative(&self, s: f64) -> f64 {
        let raw_s = match *self {
            CProfile::Unit | CProfile::Constant { .. } => 0.0,
            CProfile::ExpDecay {
                amplitude, rate, ..
            } => -amplitude * rate * (-rate * s).exp(),
        };
        let (ramp, ramp_s) = self.ramp(s);
        raw_s * ramp + (self.raw(s) - 1.0) * ramp_s
    }

    /// Onset ramp 1 − exp(−(s/onset)⁶) and its derivative.
    fn ramp(&self, s: f64) -> (f64, f64) {
        let onset = self.onset();
        if onset > 0.0 {
            let x6 = (s / onset).powi(6);
            (-(-x6).exp_m1(), 6.0 * x6 / s * (-x6).exp())
        } else {
            (1.0, 0.0)
        }
    }

    pub fn is_unit(&self) -> bool {
        match *self {
            CProfile::Unit => true,
            CProfile::Constant { value, .. } => value == 1.0,
            CProfile::ExpDecay { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Radial state at one s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialState {
    pub s: f64,
    pub v: f64,
    pub v_s: f64,
    pub v_ss: f64,
    /// (v_s² − 1)² − e^{4v}.
    pub first_integral: f64,
}

impl RadialState {
    pub fn radial_mass(&self) -> f64 {
        self.first_integral / 20.0
    }
}

/// Boundary collar: for s below the first node the profile is the seed
/// expansion v = −log sinh s + f s⁴ + shift.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Seed {
    f: f64,
    shift: f64,
}

impl Seed {
    fn state(&self, s: f64) -> RadialState {
        let v = -s.sinh().ln() + self.f * s.powi(4) + self.shift;
        let v_s = -1.0 / s.tanh() + 4.0 * self.f * s.powi(3);
        let v_ss = 1.0 / s.sinh().powi(2) + 12.0 * self.f * s * s;
        RadialState {
            s,
            v,
            v_s,
            v_ss,
            first_integral: first_integral(v, v_s),
        }
    }
}

/// Solved radial profile with dense evaluation.
///
/// Between stored nodes the ODE is re-integrated from the nearest node, so
/// dense values carry the same accuracy as the nodes themselves.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub c_profile: CProfile,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub v_s: Vec<f64>,
    /// W_c = (v_s² − 1)² − c(s)e^{4v} at each node (the integrated variable;
    /// equal to W = 20m when c ≡ 1).
    pub w_c: Vec<f64>,
    tol: f64,
    seed: Seed,
}

impl RadialSolution {
    fn rhs(c: &CProfile) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        move |s, y| {
            let e4 = (4.0 * y[0]).exp();
            let q = y[1] + c.eval(s) * e4;
            if !(q > 0.0) {
                return [f64::NAN, f64::NAN];
            }
            let v_s = -(1.0 + q.sqrt()).sqrt();
            let c_s = c.derivative(s);
            let dw = if c_s == 0.0 { 0.0 } else { -c_s * e4 };
            [v_s, dw]
        }
    }

    fn solve(c: CProfile, seed: Seed, w0: f64, s_start: f64, s_end: f64, tol: f64) -> Result<Self> {
        if !(s_start > 0.0 && s_end > s_start) {
            return Err(Error::InvalidInput(format!(
                "need 0 < s_start < s_end, got [{s_start}, {s_end}]"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let v0 = seed.state(s_start).v;
        let mut sol = Self {
            c_profile: c,
            s: Vec::new(),
            v: Vec::new(),
            v_s: Vec::new(),
            w_c: Vec::new(),
            tol,
            seed,
        };
        sol.push(s_start, v0, w0)?;
        let mut last = (s_start, v0, w0);
        let solver = Dopri5::new(tol).with_h_max(0.05);
        let res = solver.integrate(Self::rhs(&c), s_start, [v0, w0], s_end, |s, y| {
            last = (s, y[0], y[1]);
            sol.push(s, y[0], y[1])
        });
        match res {
            Ok(_) => Ok(sol),
            Err(Error::Stiffness { s, h }) => {
                let gap = (last.2 + c.eval(last.0) * (4.0 * last.1).exp())
                    .max(0.0)
                    .sqrt();
                if gap < 1e-2 {
                    Err(Error::ConeViolation { s: last.0, gap })
                } else {
                    Err(Error::Stiffness { s, h })
                }
            }
            Err(e) => Err(e),
        }
    }

    fn push(&mut self, s: f64, v: f64, w_c: f64) -> Result<()> {
        let st = self.state_from(s, v, w_c);
        cone_check(s, st.v_s * st.v_s - 1.0, st.first_integral)?;
        self.s.push(s);
        self.v.push(v);
        self.v_s.push(st.v_s);
        self.w_c.push(w_c);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_start(&self) -> f64 {
        self.s[0]
    }

    pub fn s_end(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    fn node_state(&self, i: usize) -> RadialState {
        self.state_from(self.s[i], self.v[i], self.w_c[i])
    }

    fn state_from(&self, s: f64, v: f64, w_c: f64) -> RadialState {
        let e4 = (4.0 * v).exp();
        let c = self.c_profile.eval(s);
        let gap = (w_c + c * e4).sqrt();
        let v_s = -(1.0 + gap).sqrt();
        RadialState {
            s,
            v,
            v_s,
            v_ss: c * e4 / gap,
            first_integral: if c == 1.0 { w_c } else { w_c + (c - 1.0) * e4 },
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = RadialState> + '_ {
        (0..self.len()).map(|i| self.node_state(i))
    }

    /// State at arbitrary s > 0. Below the first node the seed collar is used;
    /// between nodes the ODE is stepped from both neighbours; past the last
    /// node it is continued adaptively.
    pub fn state_at(&self, s: f64) -> Result<RadialState> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!(
                "radial coordinate s = {s} outside (0, inf)"
            )));
        }
        if s < self.s_start() {
            return Ok(self.seed.state(s));
        }
        let idx = self.s.partition_point(|&x| x < s);
        if idx < self.len() && self.s[idx] == s {
            return Ok(self.node_state(idx));
        }
        let (v, w) = if idx >= self.len() {
            let i = self.len() - 1;
            let y = Dopri5::new(self.tol.min(1e-13)).integrate(
                Self::rhs(&self.c_profile),
                self.s[i],
                [self.v[i], self.w_c[i]],
                s,
                |_, _| Ok(()),
            )?;
            (y[0], y[1])
        } else {
            // Propagate from both neighbouring nodes and blend with a quintic
            // weight, so dense values are C² in s across node boundaries.
            let (l, r) = (idx - 1, idx);
            let xi = (s - self.s[l]) / (self.s[r] - self.s[l]);
            let wgt = xi * xi * xi * (10.0 - 15.0 * xi + 6.0 * xi * xi);
            let yl = self.propagate(l, s);
            let yr = self.propagate(r, s);
            (
                (1.0 - wgt) * yl[0] + wgt * yr[0],
                (1.0 - wgt) * yl[1] + wgt * yr[1],
            )
        };
        if !(v.is_finite() && w.is_finite()) {
            return Err(Error::Numeric(format!(
                "dense evaluation failed at s = {s}"
            )));
        }
        Ok(self.state_from(s, v, w))
    }

    /// Fixed-step fifth-order propagation from node `i` to `s`. Steps of at
    /// most 0.004 and 5% of s keep the local error near roundoff.
    fn propagate(&self, i: usize, s: f64) -> [f64; 2] {
        let span = (s - self.s[i]).abs();
        let h = 0.004_f64.min(0.05 * s.min(self.s[i]));
        let n = (span / h).ceil() as usize;
        Dopri5::new(self.tol).fixed_steps(
            Self::rhs(&self.c_profile),
            self.s[i],
            [self.v[i], self.w_c[i]],
            s,
            n,
        )
    }

    /// β estimated from the far end of the profile: −v_s(s_end) − 1.
    pub fn beta_estimate(&self) -> f64 {
        -self.v_s[self.len() - 1] - 1.0
    }

    /// CSV with columns s, r, v, v_s, first_integral, radial_mass (17 significant digits).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,r,v,v_s,first_integral,radial_mass")?;
        for st in self.nodes() {
            let fi = first_integral(st.v, st.v_s);
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                st.s,
                (-st.s).exp(),
                st.v,
                st.v_s,
                fi,
                fi / 20.0
            )?;
        }
        Ok(())
    }
}

/// With W ≥ 0 the gap v_s² − 1 ≥ e^{2v} only decays asymptotically (β = 0 ends);
/// it can reach zero at finite s only when W < 0.
fn cone_check(s: f64, gap: f64, w: f64) -> Result<()> {
    if !(gap > CONE_DELTA) && !(w >= 0.0) {
        return Err(Error::ConeViolation { s, gap });
    }
    Ok(())
}

/// Chang–Han–Yang AH solution of (v_s² − 1) v_ss = e^{4v} with first integral k².
#[derive(Debug, Clone)]
pub struct ChySolution {
    pub k: f64,
    /// √(k + 1) − 1.
    pub beta: f64,
    pub radial: RadialSolution,
}

impl ChySolution {
    pub fn grid(&self) -> &[f64] {
        &self.radial.s
    }

    pub fn v(&self) -> &[f64] {
        &self.radial.v
    }

    pub fn v_s(&self) -> &[f64] {
        &self.radial.v_s
    }

    /// β read off the far end of the profile, to cross-check [`ChySolution::beta`].
    pub fn beta_from_profile(&self) -> f64 {
        self.radial.beta_estimate()
    }

    /// σ₂ mass of the model, −k²/20.
    pub fn m2(&self) -> f64 {
        -self.k * self.k / 20.0
    }
}

/// Solves the CHY model from the boundary expansion
/// v(s₀) = −log sinh s₀ − (k²/20)s₀⁴ along v_s = −√(1 + √(k² + e^{4v})).
pub fn solve_chy(k: f64, s_start: f64, s_end: f64, tol: f64) -> Result<ChySolution> {
    let beta = beta_of_k(k)?;
    let f = -k * k / 20.0;
    let radial = RadialSolution::solve(
        CProfile::Unit,
        Seed { f, shift: 0.0 },
        k * k,
        s_start,
        s_end,
        tol,
    )?;
    Ok(ChySolution { k, beta, radial })
}

/// Radial solution of σ₂ = (3/2)c(s) seeded with boundary coefficient `f_seed`.
#[derive(Debug, Clone)]
pub struct RotSymSolution {
    pub f_seed: f64,
    pub radial: RadialSolution,
}

impl RotSymSolution {
    pub fn c_profile(&self) -> &CProfile {
        &self.radial.c_profile
    }

    pub fn beta_estimate(&self) -> f64 {
        self.radial.beta_estimate()
    }

    /// Negative-cone conditions v_s² > 1, v_ss > 0 at every node.
    pub fn cone_conditions_hold(&self) -> bool {
        self.radial
            .nodes()
            .all(|st| st.v_s * st.v_s > 1.0 && st.v_ss > 0.0)
    }

    /// False when the seed had to be rescaled (c(s₀) ≠ 1), i.e. the metric is
    /// not AH-normalized and `f_seed` is not its σ₂ mass.
    pub fn is_ah_normalized(&self) -> bool {
        (self.radial.c_profile.eval(self.radial.s_start()) - 1.0).abs() < 1e-8
    }
}

/// Integrates σ₂ = (3/2)c(s) from s_start with
/// v = −log sinh s₀ + f s₀⁴ − (1/4)log c(s₀) and v_s on the first-integral
/// branch (v_s² − 1)² = −20f + c(s₀)e^{4v}.
pub fn solve_rotsym_sigma2(
    c: CProfile,
    f_seed: f64,
    s_start: f64,
    s_end: f64,
    tol: f64,
) -> Result<RotSymSolution> {
    c.validate()?;
    if !(f_seed <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "f_seed must be <= 0, got {f_seed}"
        )));
    }
    if !(s_start > 0.0) {
        return Err(Error::InvalidInput(format!(
            "s_start must be positive, got {s_start}"
        )));
    }
    let c0 = c.eval(s_start);
    let seed = Seed {
        f: f_seed,
        shift: -0.25 * c0.ln(),
    };
    let w0 = -20.0 * f_seed;
    let radial = RadialSolution::solve(c, seed, w0, s_start, s_end, tol)?;
    Ok(RotSymSolution { f_seed, radial })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_integral_examples() {
        for s in [0.1, 1.0, 3.0] {
            let v = -f64::sinh(s).ln();
            let v_s = -1.0 / s.tanh();
            assert!(first_integral(v, v_s).abs() < 1e-12 * (1.0 + 1.0 / s.powi(4)));
        }
        assert_eq!(first_integral(0.0, -2.0), 8.0);
        assert_eq!(radial_mass(0.0, -2.0), 0.4);
    }

    #[test]
    fn beta_k_round_trip() {
        assert_eq!(beta_of_k(0.0).unwrap(), 0.0);
        assert_eq!(k_of_beta(1.0).unwrap(), 3.0);
        for k in [0.1, 1.0, 10.0] {
            let back = k_of_beta(beta_of_k(k).unwrap()).unwrap();
            assert!((back - k).abs() < 1e-14 * k.max(1.0));
        }
        assert!(beta_of_k(-1.0).is_err());
        assert!(k_of_beta(-0.5).is_err());
    }

    #[test]
    fn hyperbolic_is_k_zero() {
        let sol = solve_chy(0.0, 0.05, 8.0, 1e-12).unwrap();
        for st in sol.radial.nodes() {
            assert!((st.v + st.s.sinh().ln()).abs() < 1e-9, "s = {}", st.s);
        }
        assert_eq!(sol.beta, 0.0);
    }

    #[test]
    fn chy_k3_asymptotics() {
        let sol = solve_chy(3.0, 0.05, 10.0, 1e-12).unwrap();
        assert_eq!(sol.beta, 1.0);
        assert!((sol.m2() + 0.45).abs() < 1e-15);
        let st = sol.radial.state_at(8.0).unwrap();
        assert!((st.v_s + 2.0).abs() < 1e-4);
        assert!((sol.beta_from_profile() - 1.0).abs() < 1e-4);
        for st in sol.radial.nodes() {
            assert!((st.radial_mass() - 0.45).abs() < 1e-8);
            let fi = first_integral(st.v, st.v_s);
            assert!((fi - 9.0).abs() / 10.0 < 1e-9, "s = {}: {fi}", st.s);
        }
    }

    #[test]
    fn chy_profile_is_monotone() {
        let sol = solve_chy(1.0, 0.05, 10.0, 1e-12).unwrap();
        let floor = (sol.beta - 0.01).max(0.0);
        let mut prev = f64::INFINITY;
        for st in sol.radial.nodes() {
            assert!(st.v_s <= -1.0);
            assert!(st.v < prev);
            prev = st.v;
            if st.s >= 1.0 {
                assert!(st.v_s <= -1.0 - floor);
            }
            assert!((st.radial_mass() - 0.05).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_chy_inputs() {
        assert!(matches!(
            solve_chy(-1.0, 0.05, 1.0, 1e-10),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            solve_chy(1.0, 0.5, 0.1, 1e-10),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            solve_chy(1.0, 0.05, 1.0, 0.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rotsym_unit_profile_reproduces_chy() {
        let chy = solve_chy(3.0, 0.05, 10.0, 1e-12).unwrap();
        let rot = solve_rotsym_sigma2(CProfile::Unit, -0.45, 0.05, 10.0, 1e-12).unwrap();
        for s in [0.05, 0.3, 1.0, 2.5, 6.0, 9.5] {
            let a = chy.radial.state_at(s).unwrap();
            let b = rot.radial.state_at(s).unwrap();
            assert!((a.v - b.v).abs() < 1e-6 * a.v.abs().max(1.0));
            assert!((a.v_s - b.v_s).abs() < 1e-6 * a.v_s.abs());
        }
        let hyp = solve_rotsym_sigma2(CProfile::Unit, 0.0, 0.05, 10.0, 1e-12).unwrap();
        assert!(hyp.radial.nodes().all(|st| st.radial_mass().abs() < 1e-10));
    }

    #[test]
    fn rotsym_decay_profile_has_decreasing_mass() {
        let c = CProfile::ExpDecay {
            amplitude: 0.5,
            rate: 1.0,
            onset: 0.5,
        };
        let sol = solve_rotsym_sigma2(c, -1.0, 0.01, 12.0, 1e-12).unwrap();
        assert!(sol.cone_conditions_hold());
        assert!(sol.is_ah_normalized());
        let m: Vec<f64> = sol.radial.nodes().map(|s| s.radial_mass()).collect();
        for pair in m.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-8);
        }
        // Derivative of 20 m along the ODE is 4 v_s (c - 1) e^{4v} < 0.
        let st = sol.radial.state_at(1.0).unwrap();
        let h = 1e-4;
        let a = sol.radial.state_at(1.0 - h).unwrap().first_integral;
        let b = sol.radial.state_at(1.0 + h).unwrap().first_integral;
        let fd = (b - a) / (2.0 * h);
        let exact = 4.0 * st.v_s * (c.eval(1.0) - 1.0) * (4.0 * st.v).exp();
        assert!(exact < 0.0);
        assert!((fd - exact).abs() < 1e-6 * exact.abs());
        let beta = sol.beta_estimate();
        assert!(beta > 0.0 && beta < 1.0);
    }

    #[test]
    fn literal_boundary_profile_leaves_the_cone() {
        let c = CProfile::ExpDecay {
            amplitude: 0.5,
            rate: 1.0,
            onset: 0.0,
        };
        // Unnormalized seed (onset 0) is rescaled and survives...
        assert!(solve_rotsym_sigma2(c, -1.0, 0.05, 5.0, 1e-10).is_ok());
        // ...while a too-steep onset drives v_s to -1.
        let steep = CProfile::ExpDecay {
            amplitude: 0.5,
            rate: 1.0,
            onset: 0.3,
        };
        let r = solve_rotsym_sigma2(steep, -1.0, 0.01, 5.0, 1e-10);
        assert!(matches!(r, Err(Error::ConeViolation { .. })), "{r:?}");
    }

    #[test]
    fn constant_profile_is_rescaled_chy() {
        let c = CProfile::Constant {
            value: 1.2,
            onset: 0.0,
        };
        let rot = solve_rotsym_sigma2(c, -0.45, 0.05, 10.0, 1e-12).unwrap();
        let chy = solve_chy(3.0, 0.05, 10.0, 1e-12).unwrap();
        assert!(!rot.is_ah_normalized());
        for s in [0.1, 1.0, 5.0] {
            let a = chy.radial.state_at(s).unwrap();
            let b = rot.radial.state_at(s).unwrap();
            assert!((b.v - (a.v - 0.25 * 1.2f64.ln())).abs() < 1e-8);
            let sigma2 = 1.5 * (b.v_s * b.v_s - 1.0) * b.v_ss * (-4.0 * b.v).exp();
            assert!((sigma2 - 1.8).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_rotsym_inputs() {
        let bad = CProfile::Constant {
            value: 0.9,
            onset: 0.0,
        };
        assert!(matches!(
            solve_rotsym_sigma2(bad, -1.0, 0.05, 1.0, 1e-10),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            solve_rotsym_sigma2(CProfile::Unit, 0.5, 0.05, 1.0, 1e-10),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dense_output_matches_nodes_and_collar() {
        let sol = solve_chy(3.0, 0.05, 10.0, 1e-12).unwrap();
        let i = sol.radial.len() / 3;
        let (s_a, s_b) = (sol.radial.s[i], sol.radial.s[i + 1]);
        let mid = sol.radial.state_at(0.5 * (s_a + s_b)).unwrap();
        assert!((mid.first_integral - 9.0).abs() < 1e-10);
        let collar = sol.radial.state_at(0.02).unwrap();
        assert!((collar.v - (-(0.02f64).sinh().ln() - 0.45 * 0.02f64.powi(4))).abs() < 1e-15);
        let far = sol.radial.state_at(14.0).unwrap();
        assert!((far.v_s + 2.0).abs() < 1e-8);
        assert!(sol.radial.state_at(0.0).is_err());
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let sol = solve_chy(3.0, 0.05, 1.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        sol.radial.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "s,r,v,v_s,first_integral,radial_mass"
        );
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|x| x.parse().unwrap())
            .collect();
        assert_eq!(row.len(), 6);
        assert_eq!(row[0], 0.05);
        assert!((row[5] - 0.45).abs() < 1e-9);
    }
}

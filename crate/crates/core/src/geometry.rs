//! Pointwise geometry of conformal metrics g = e^{2u} g_E on the unit 4-disc.
//!
//! Everything here is a pure function of a [`Jet2`], the value, gradient and
//! Hessian of u at a point, expressed in the Euclidean frame.

use crate::error::{Error, Result};

/// Euclidean coordinates x¹..x⁴.
pub type Point4 = [f64; 4];

/// Default floor on |∇u| below which a point counts as critical.
pub const GRAD_FLOOR: f64 = 1e-10;

pub fn norm(x: &Point4) -> f64 {
    dot(x, x).sqrt()
}

pub fn dot(a: &Point4, b: &Point4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn axpy(center: &Point4, r: f64, dir: &Point4) -> Point4 {
    [0, 1, 2, 3].map(|i| center[i] + r * dir[i])
}

pub fn distance(a: &Point4, b: &Point4) -> f64 {
    let d = [0, 1, 2, 3].map(|i| a[i] - b[i]);
    norm(&d)
}

/// Value, gradient and Hessian of the conformal factor at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

impl Jet2 {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            grad: [0.0; 4],
            hess: [[0.0; 4]; 4],
        }
    }

    /// Jet of a radial function u(|x - center|) at offset `y = x - center`,
    /// given u_r and u_rr at ρ = |y|.
    pub fn radial(value: f64, y: &Point4, u_r: f64, u_rr: f64) -> Self {
        let rho = norm(y);
        let th = y.map(|c| c / rho);
        let mut jet = Self::zero();
        jet.value = value;
        for i in 0..4 {
            jet.grad[i] = u_r * th[i];
            for j in 0..4 {
                let tt = th[i] * th[j];
                let d = if i == j { 1.0 } else { 0.0 };
                jet.hess[i][j] = u_rr * tt + (u_r / rho) * (d - tt);
            }
        }
        jet
    }

    pub fn grad_norm(&self) -> f64 {
        norm(&self.grad)
    }

    pub fn laplacian(&self) -> f64 {
        (0..4).map(|i| self.hess[i][i]).sum()
    }

    /// Adds a constant to u; gradient and Hessian are unchanged.
    pub fn shifted(mut self, c: f64) -> Self {
        self.value += c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite());
        if !finite {
            return Err(Error::InvalidInput("jet has non-finite entries".into()));
        }
        let scale = self
            .hess
            .iter()
            .flatten()
            .fold(0.0_f64, |m, h| m.max(h.abs()))
            .max(1.0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (self.hess[i][j] - self.hess[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::Numeric(format!(
                        "Hessian not symmetric at ({i},{j}): {} vs {}",
                        self.hess[i][j], self.hess[j][i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Symmetric 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym4 {
    pub m: [[f64; 4]; 4],
}

impl Sym4 {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: self.m.map(|row| row.map(|v| v * c)),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.m[i][i]).sum()
    }

    /// Eigenvalues in ascending order, by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Result<[f64; 4]> {
        let mut a = self.m;
        let scale = frob(&a).max(1.0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (a[i][j] - a[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::Numeric(
                        "eigen-solver given a non-symmetric matrix".into(),
                    ));
                }
            }
        }
        let norm = frob(&a);
        if !norm.is_finite() {
            return Err(Error::Numeric("non-finite matrix".into()));
        }
        if norm == 0.0 {
            return Ok([0.0; 4]);
        }
        for _sweep in 0..64 {
            let off: f64 = (0..4)
                .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off.sqrt() <= 1e-15 * norm {
                let mut ev = [a[0][0], a[1][1], a[2][2], a[3][3]];
                ev.sort_by(|x, y| x.total_cmp(y));
                return Ok(ev);
            }
            for p in 0..4 {
                for q in (p + 1)..4 {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..4 {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..4 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                }
            }
        }
        Err(Error::Numeric("Jacobi iteration did not converge".into()))
    }
}

fn frob(a: &[[f64; 4]; 4]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Elementary symmetric polynomial e_k of four numbers (e_0 = 1).
pub fn elementary_symmetric(l: &[f64; 4], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => l.iter().sum(),
        2 => {
            let mut s = 0.0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    s += l[i] * l[j];
                }
            }
            s
        }
        3 => l[0] * l[1] * l[2] + l[0] * l[1] * l[3] + l[0] * l[2] * l[3] + l[1] * l[2] * l[3],
        4 => l[0] * l[1] * l[2] * l[3],
        _ => 0.0,
    }
}

/// Schouten tensor of g = e^{2u} g_E in the Euclidean frame:
/// A_ij = -u_ij + u_i u_j - (|∇u|²/2) δ_ij.
pub fn schouten_tensor(jet: &Jet2) -> Result<Sym4> {
    jet.validate()?;
    let g2 = crate::geometry::dot(&jet.grad, &jet.grad);
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = -jet.hess[i][j] + jet.grad[i] * jet.grad[j];
        }
        m[i][i] -= 0.5 * g2;
    }
    // Symmetrize against roundoff in the jet.
    for i in 0..4 {
        for j in (i + 1)..4 {
            let a = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = a;
            m[j][i] = a;
        }
    }
    Ok(Sym4 { m })
}

/// Eigenvalues of g^{-1}A_g = e^{-2u} A, ascending.
pub fn curvature_eigenvalues(jet: &Jet2) -> Result<[f64; 4]> {
    let a = schouten_tensor(jet)?;
    a.scaled((-2.0 * jet.value).exp()).eigenvalues()
}

/// σ_k(g^{-1}A_g) for k in 1..=4.
pub fn sigma_k(jet: &Jet2, k: usize) -> Result<f64> {
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidInput(format!(
            "sigma_k needs k in 1..=4, got {k}"
        )));
    }
    let ev = curvature_eigenvalues(jet)?;
    Ok(elementary_symmetric(&ev, k))
}

/// Mean curvature of the level set {u = u(x)} through the point, with respect
/// to the normal ∇u/|∇u|: H = (Δu - n·∇²u·n)/|∇u|.
pub fn mean_curvature(jet: &Jet2, grad_floor: f64) -> Result<f64> {
    let g = jet.grad_norm();
    if !(g > grad_floor) {
        return Err(Error::DegenerateGradient {
            norm: g,
            floor: grad_floor,
        });
    }
    let n = jet.grad.map(|c| c / g);
    let mut nhn = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            nhn += n[i] * jet.hess[i][j] * n[j];
        }
    }
    Ok((jet.laplacian() - nhn) / g)
}

/// Trace of the tangential block Ã = -h|∇u| - (|∇u|²/2)δ: σ₁(Ã) = -H|∇u| - (3/2)|∇u|².
pub fn sigma1_tilde(jet: &Jet2, grad_floor: f64) -> Result<f64> {
    let h = mean_curvature(jet, grad_floor)?;
    let g = jet.grad_norm();
    Ok(-h * g - 1.5 * g * g)
}

/// Step for [`finite_difference_jet`] at a point whose distance to the nearest
/// singular set (disc boundary or cone point) is `dist`.
pub fn default_fd_step(dist: f64) -> f64 {
    (3e-4 * dist).clamp(1e-7, 1e-4)
}

/// Central-difference 2-jet of `u` at `x` with step `h`; O(h²) in gradient and Hessian.
pub fn finite_difference_jet<F>(u: F, x: &Point4, h: f64) -> Result<Jet2>
where
    F: Fn(&Point4) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let shifted = |d: &[(usize, f64)]| -> Result<f64> {
        let mut y = *x;
        for &(i, s) in d {
            y[i] += s * h;
        }
        if norm(&y) >= 1.0 {
            return Err(Error::Domain(format!(
                "stencil point {y:?} leaves the unit disc"
            )));
        }
        u(&y).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(m),
            other => other,
        })
    };
    let u0 = shifted(&[])?;
    let mut jet = Jet2::zero();
    jet.value = u0;
    let mut plus = [0.0; 4];
    let mut minus = [0.0; 4];
    for i in 0..4 {
        plus[i] = shifted(&[(i, 1.0)])?;
        minus[i] = shifted(&[(i, -1.0)])?;
        jet.grad[i] = (plus[i] - minus[i]) / (2.0 * h);
        jet.hess[i][i] = (plus[i] - 2.0 * u0 + minus[i]) / (h * h);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let pp = shifted(&[(i, 1.0), (j, 1.0)])?;
            let pm = shifted(&[(i, 1.0), (j, -1.0)])?;
            let mp = shifted(&[(i, -1.0), (j, 1.0)])?;
            let mm = shifted(&[(i, -1.0), (j, -1.0)])?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            jet.hess[i][j] = v;
            jet.hess[j][i] = v;
        }
    }
    Ok(jet)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn jet_strategy() -> impl Strategy<Value = Jet2> {
        (
            -2.0..2.0f64,
            prop::array::uniform4(-3.0..3.0f64),
            prop::array::uniform10(-5.0..5.0f64),
        )
            .prop_map(|(v, g, h)| {
                let mut jet = Jet2::zero();
                jet.value = v;
                jet.grad = g;
                let mut k = 0;
                for i in 0..4 {
                    for j in i..4 {
                        jet.hess[i][j] = h[k];
                        jet.hess[j][i] = h[k];
                        k += 1;
                    }
                }
                jet
            })
    }

    proptest! {
        #[test]
        fn newton_identity_holds(jet in jet_strategy()) {
            let ev = curvature_eigenvalues(&jet).unwrap();
            let s1 = elementary_symmetric(&ev, 1);
            let s2 = elementary_symmetric(&ev, 2);
            let p2: f64 = ev.iter().map(|l| l * l).sum();
            let scale = (s1 * s1).max(p2).max(1e-300);
            prop_assert!((2.0 * s2 - (s1 * s1 - p2)).abs() <= 1e-12 * scale);
        }

        #[test]
        fn constant_shift_scales_sigma_k(jet in jet_strategy(), c in -1.0..1.0f64) {
            let a = schouten_tensor(&jet).unwrap();
            let b = schouten_tensor(&jet.shifted(c)).unwrap();
            prop_assert_eq!(a, b);
            // Evaluate through the characteristic-polynomial coefficients of A
            // so the comparison is not limited by eigenvector conditioning.
            let ea = a.eigenvalues().unwrap();
            for k in 1..=4 {
                let base = elementary_symmetric(&ea, k) * (-2.0 * k as f64 * jet.value).exp();
                let shifted = sigma_k(&jet.shifted(c), k).unwrap();
                let expect = (-2.0 * k as f64 * c).exp() * base;
                let scale = expect.abs().max(
                    ea.iter().map(|l| l.abs()).fold(0.0, f64::max).powi(k as i32)
                        * (-2.0 * k as f64 * (jet.value + c)).exp());
                prop_assert!((shifted - expect).abs() <= 1e-12 * scale.max(1e-300));
            }
        }

        #[test]
        fn mean_curvature_symmetries(jet in jet_strategy(), c in -1.0..1.0f64) {
            prop_assume!(jet.grad_norm() > 1e-3);
            let h = mean_curvature(&jet, GRAD_FLOOR).unwrap();
            let h_shift = mean_curvature(&jet.shifted(c), GRAD_FLOOR).unwrap();
            prop_assert_eq!(h, h_shift);
            let mut flipped = jet;
            flipped.value = -jet.value;
            flipped.grad = jet.grad.map(|g| -g);
            flipped.hess = jet.hess.map(|row| row.map(|h| -h));
            let h_flip = mean_curvature(&flipped, GRAD_FLOOR).unwrap();
            prop_assert!((h + h_flip).abs() <= 1e-12 * h.abs().max(1.0));
        }

        #[test]
        fn d_integrand_identity(jet in jet_strategy()) {
            prop_assume!(jet.grad_norm() > 1e-3);
            let g = jet.grad_norm();
            let h = mean_curvature(&jet, GRAD_FLOOR).unwrap();
            let lhs = 0.25 * (2.0 * h * g * g + 2.0 * g.powi(3));
            let rhs = -0.5 * sigma1_tilde(&jet, GRAD_FLOOR).unwrap() * g - 0.25 * g.powi(3);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(g.powi(3)).max(1.0));
        }
    }
}

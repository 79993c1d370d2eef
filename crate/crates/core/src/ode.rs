//! Dormand–Prince 5(4) with adaptive step control for small fixed-size systems.

use crate::error::{Error, Result};

// Butcher tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Steps shorter than `h_min * (1 + |s|)` abort with a stiffness error.
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrates y' = f(s, y) from `s0` to `s1` (either direction).
    ///
    /// `on_step` sees every accepted step and may abort the integration.
    /// Right-hand sides that return non-finite values make the step fail and shrink.
    pub fn integrate<const N: usize, F, G>(
        &self,
        mut f: F,
        s0: f64,
        y0: [f64; N],
        s1: f64,
        mut on_step: G,
    ) -> Result<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        G: FnMut(f64, &[f64; N]) -> Result<()>,
    {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        let span = s1 - s0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut s = s0;
        let mut y = y0;
        let mut k = [[0.0; N]; 7];
        k[0] = f(s, &y);
        if !k[0].iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite right-hand side at s = {s}"
            )));
        }
        let mut h = dir * self.initial_step(&y, &k[0], span.abs());
        let mut fails_in_row = 0usize;

        for _ in 0..self.max_steps {
            if (s1 - s) * dir <= 0.0 {
                return Ok(y);
            }
            if (s + h - s1) * dir > 0.0 {
                h = s1 - s;
            }
            let (y_new, err, k_last) = self.step(&mut f, s, &y, h, &mut k);
            let err_ok = y_new.iter().all(|v| v.is_finite()) && err.is_finite();
            if err_ok && err <= 1.0 {
                let at_end = (s + h - s1) * dir >= 0.0;
                s = if at_end { s1 } else { s + h };
                y = y_new;
                k[0] = k_last;
                on_step(s, &y)?;
                fails_in_row = 0;
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = dir * (h.abs() * fac).min(self.h_max);
            } else {
                fails_in_row += 1;
                let fac = if err_ok {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.25
                };
                h *= fac;
                if h.abs() < self.h_min * (1.0 + s.abs()) || fails_in_row > 200 {
                    return Err(Error::Stiffness { s, h: h.abs() });
                }
            }
        }
        Err(Error::Stiffness { s, h: h.abs() })
    }

    /// Advances from `s0` to `s1` in `n` equal fifth-order steps without error
    /// control. The result is a smooth function of `s1`, which keeps finite
    /// differences of dense output free of step-selection noise.
    pub fn fixed_steps<const N: usize, F>(
        &self,
        mut f: F,
        s0: f64,
        y0: [f64; N],
        s1: f64,
        n: usize,
    ) -> [f64; N]
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let n = n.max(1);
        let h = (s1 - s0) / n as f64;
        let mut y = y0;
        let mut k = [[0.0; N]; 7];
        for i in 0..n {
            let s = s0 + i as f64 * h;
            k[0] = f(s, &y);
            let (y_new, _, _) = self.step(&mut f, s, &y, h, &mut k);
            y = y_new;
        }
        y
    }

    fn initial_step<const N: usize>(&self, y: &[f64; N], dy: &[f64; N], span: f64) -> f64 {
        let sc: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let d0 = rms(y.iter().zip(&sc).map(|(v, s)| v / s));
        let d1 = rms(dy.iter().zip(&sc).map(|(v, s)| v / s));
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(span).min(self.h_max).max(1e-12 * span)
    }

    #[allow(clippy::type_complexity)]
    fn step<const N: usize, F>(
        &self,
        f: &mut F,
        s: f64,
        y: &[f64; N],
        h: f64,
        k: &mut [[f64; N]; 7],
    ) -> ([f64; N], f64, [f64; N])
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        for stage in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[stage] = f(s + C[stage] * h, &ys);
        }
        let mut y5 = *y;
        let mut e = [0.0; N];
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for st in 0..7 {
                d5 += B5[st] * k[st][i];
                d4 += B4[st] * k[st][i];
            }
            y5[i] += h * d5;
            e[i] = h * (d5 - d4);
        }
        let err = rms((0..N).map(|i| {
            let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
            e[i] / sc
        }));
        (y5, err, k[6])
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut s = 0.0;
    for v in it {
        s += v * v;
        n += 1;
    }
    (s / n.max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = Dopri5::new(1e-12)
            .integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, |_, _| Ok(()))
            .unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let y = Dopri5::new(1e-12)
            .integrate(f, 2.0, [2.0f64.sin(), 2.0f64.cos()], 0.0, |_, _| Ok(()))
            .unwrap();
        assert!(y[0].abs() < 1e-10);
        assert!((y[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blow_up_is_reported_as_stiffness() {
        // y' = y^2, y(0) = 1 blows up at s = 1.
        let r = Dopri5::new(1e-10).integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            |_, _| Ok(()),
        );
        match r {
            Err(Error::Stiffness { s, .. }) => assert!((s - 1.0).abs() < 1e-3),
            other => panic!("expected stiffness, got {other:?}"),
        }
    }

    #[test]
    fn fixed_steps_match_closed_form() {
        let y = Dopri5::new(1e-12).fixed_steps(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 0.5, 50);
        assert!((y[0] - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn observer_can_abort() {
        let r = Dopri5::new(1e-8).integrate(
            |_, y: &[f64; 1]| [1.0 + 0.0 * y[0]],
            0.0,
            [0.0],
            1.0,
            |s, _| {
                if s > 0.5 {
                    Err(Error::Numeric("stop".into()))
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}

//! Embedded Dormand-Prince 8(5,3) integrator with continuous (dense) output.
//!
//! The stepper is generic over the state dimension so the same code drives the
//! phase-plane system, the scalar flow line `r'(t) = F(r)` and any augmented
//! systems used in tests.

use crate::error::{Error, Result};
use crate::ode_tableau::{A, C, D, E3_CORRECTION, E5, INTERP_POWER, STAGES, STAGES_EXTENDED};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;
const DEFAULT_STEP_BUDGET: usize = 20_000_000;

// 4-point Gauss-Legendre rule on [0, 1]; exact for the degree-7 interpolant.
const GL_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-12,
            max_step: f64::INFINITY,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel > 0.0 && self.abs > 0.0) {
            return Err(Error::InvalidControls(format!(
                "tolerances must be positive (rel = {}, abs = {})",
                self.rel, self.abs
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidControls(format!(
                "max_step must be positive, got {}",
                self.max_step
            )));
        }
        Ok(())
    }
}

/// Polynomial interpolant over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment<const N: usize> {
    t0: f64,
    h: f64,
    y0: [f64; N],
    coeffs: [[f64; N]; INTERP_POWER],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }

    pub(crate) fn shift(&mut self, dt: f64) {
        self.t0 += dt;
    }

    pub fn lo(&self) -> f64 {
        self.t0.min(self.t0 + self.h)
    }

    pub fn hi(&self) -> f64 {
        self.t0.max(self.t0 + self.h)
    }

    fn eval_theta(&self, x: f64) -> [f64; N] {
        let mut acc = [0.0; N];
        for (i, f) in self.coeffs.iter().rev().enumerate() {
            let w = if i % 2 == 0 { x } else { 1.0 - x };
            for k in 0..N {
                acc[k] = (acc[k] + f[k]) * w;
            }
        }
        let mut y = self.y0;
        for k in 0..N {
            y[k] += acc[k];
        }
        y
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        self.eval_theta((t - self.t0) / self.h)
    }

    /// Integral of the interpolant from the segment start `t0` to `t`.
    pub fn integral_from_start(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let mut out = [0.0; N];
        if theta == 0.0 {
            return out;
        }
        for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let y = self.eval_theta(node * theta);
            for k in 0..N {
                out[k] += weight * y[k];
            }
        }
        let scale = self.h * theta;
        for v in &mut out {
            *v *= scale;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegEnd {
    /// Reached the requested end of the interval.
    Bound,
    /// The stop predicate fired after the last accepted step.
    Stopped,
}

/// Accepted steps and their interpolants, in integration order.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub segments: Vec<DenseSegment<N>>,
    pub end: LegEnd,
    pub evaluations: usize,
}

fn rms_norm<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(a, b)| (a / b).powi(2)).sum();
    (s / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    rhs: &F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    direction: f64,
    tol: &Tolerances,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut scale = [0.0; N];
    for k in 0..N {
        scale[k] = tol.abs + y0[k].abs() * tol.rel;
    }
    let d0 = rms_norm(y0, &scale);
    let d1 = rms_norm(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let mut y1 = [0.0; N];
    for k in 0..N {
        y1[k] = y0[k] + h0 * direction * f0[k];
    }
    let f1 = rhs(t0 + h0 * direction, &y1);
    let mut diff = [0.0; N];
    for k in 0..N {
        diff[k] = f1[k] - f0[k];
    }
    let d2 = rms_norm(&diff, &scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(tol.max_step)
}

/// Integrates `y' = rhs(t, y)` from `t0` towards `t_end` (either direction).
///
/// `stop` is checked after every accepted step; when it returns `true` the leg
/// ends there and the final state is the first one satisfying the predicate.
pub fn dop853<const N: usize, F, S>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
    mut stop: S,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    tol.validate()?;
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { r: t0 });
    }
    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0],
        segments: Vec::new(),
        end: LegEnd::Bound,
        evaluations: 0,
    };
    if t_end == t0 {
        return Ok(sol);
    }
    let direction = (t_end - t0).signum();

    let mut t = t0;
    let mut y = y0;
    let mut f = rhs(t, &y);
    sol.evaluations += 1;
    let mut h_abs = initial_step(&rhs, t, &y, &f, direction, tol);
    sol.evaluations += 1;

    let mut k = [[0.0; N]; STAGES_EXTENDED];
    let mut steps = 0usize;

    while direction * (t_end - t) > 0.0 {
        steps += 1;
        if steps > DEFAULT_STEP_BUDGET {
            return Err(Error::TooManySteps(DEFAULT_STEP_BUDGET));
        }
        let min_step = 10.0 * (next_toward(t, direction) - t).abs();
        h_abs = h_abs.min(tol.max_step).max(min_step);

        let mut rejected = false;
        let (t_new, y_new, f_new, h) = loop {
            if h_abs < min_step {
                return Err(Error::StepUnderflow { r: t, h: h_abs });
            }
            let mut h = h_abs * direction;
            let mut t_new = t + h;
            if direction * (t_new - t_end) > 0.0 {
                t_new = t_end;
            }
            h = t_new - t;
            h_abs = h.abs();

            k[0] = f;
            for s in 1..STAGES {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for c in 0..N {
                            ys[c] += h * a * kj[c];
                        }
                    }
                }
                k[s] = rhs(t + C[s] * h, &ys);
            }
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(STAGES) {
                let b = A[STAGES][j];
                if b != 0.0 {
                    for c in 0..N {
                        y_new[c] += h * b * kj[c];
                    }
                }
            }
            let f_new = rhs(t_new, &y_new);
            k[STAGES] = f_new;
            sol.evaluations += STAGES;

            if y_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { r: t_new });
            }

            let mut scale = [0.0; N];
            for c in 0..N {
                scale[c] = tol.abs + y[c].abs().max(y_new[c].abs()) * tol.rel;
            }
            let mut err5 = [0.0; N];
            let mut err3 = [0.0; N];
            for (j, kj) in k.iter().enumerate().take(STAGES + 1) {
                let b = if j < STAGES { A[STAGES][j] } else { 0.0 };
                let e3 = b - E3_CORRECTION
                    .iter()
                    .find(|(i, _)| *i == j)
                    .map_or(0.0, |(_, v)| *v);
                for c in 0..N {
                    err5[c] += E5[j] * kj[c];
                    err3[c] += e3 * kj[c];
                }
            }
            let mut n5 = 0.0;
            let mut n3 = 0.0;
            for c in 0..N {
                n5 += (err5[c] / scale[c]).powi(2);
                n3 += (err3[c] / scale[c]).powi(2);
            }
            let error_norm = if n5 == 0.0 && n3 == 0.0 {
                0.0
            } else {
                h_abs * n5 / ((n5 + 0.01 * n3) * N as f64).sqrt()
            };

            if error_norm < 1.0 {
                let mut factor = if error_norm == 0.0 {
                    MAX_FACTOR
                } else {
                    MAX_FACTOR.min(SAFETY * error_norm.powf(ERROR_EXPONENT))
                };
                if rejected {
                    factor = factor.min(1.0);
                }
                let h_taken = h;
                h_abs *= factor;
                break (t_new, y_new, f_new, h_taken);
            }
            h_abs *= MIN_FACTOR.max(SAFETY * error_norm.powf(ERROR_EXPONENT));
            rejected = true;
        };

        // Extra stages for the continuous extension.
        for s in (STAGES + 1)..STAGES_EXTENDED {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for c in 0..N {
                        ys[c] += h * a * kj[c];
                    }
                }
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }
        sol.evaluations += STAGES_EXTENDED - STAGES - 1;

        let mut coeffs = [[0.0; N]; INTERP_POWER];
        for c in 0..N {
            let dy = y_new[c] - y[c];
            coeffs[0][c] = dy;
            coeffs[1][c] = h * f[c] - dy;
            coeffs[2][c] = 2.0 * dy - h * (f_new[c] + f[c]);
        }
        for (row, d) in D.iter().enumerate() {
            for c in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += d[j] * kj[c];
                }
                coeffs[3 + row][c] = h * acc;
            }
        }
        sol.segments.push(DenseSegment {
            t0: t,
            h,
            y0: y,
            coeffs,
        });

        t = t_new;
        y = y_new;
        f = f_new;
        sol.times.push(t);
        sol.states.push(y);

        if stop(t, &y) {
            sol.end = LegEnd::Stopped;
            return Ok(sol);
        }
    }
    Ok(sol)
}

fn next_toward(t: f64, direction: f64) -> f64 {
    let bits = t.to_bits();
    if t == 0.0 {
        return direction * f64::from_bits(1);
    }
    let up = (t > 0.0) == (direction > 0.0);
    f64::from_bits(if up { bits + 1 } else { bits - 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_stop<const N: usize>(_: f64, _: &[f64; N]) -> bool {
        false
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let tol = Tolerances {
            rel: 1e-12,
            abs: 1e-14,
            ..Tolerances::default()
        };
        let sol = dop853(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &tol, no_stop).unwrap();
        let last = sol.states.last().unwrap()[0];
        assert!((last - (-5.0f64).exp()).abs() < 1e-12);
        // dense output inside a step
        for seg in sol.segments.iter().step_by(3) {
            let tm = 0.5 * (seg.t_start() + seg.t_end());
            assert!((seg.eval(tm)[0] - (-tm).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let tol = Tolerances {
            rel: 1e-11,
            abs: 1e-13,
            ..Tolerances::default()
        };
        let sol = dop853(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            -3.0,
            &tol,
            no_stop,
        )
        .unwrap();
        let y = sol.states.last().unwrap();
        assert!((y[0] - (-3.0f64).sin()).abs() < 1e-9);
        assert!((y[1] - (-3.0f64).cos()).abs() < 1e-9);
        assert_eq!(*sol.times.last().unwrap(), -3.0);
    }

    #[test]
    fn segment_integral_is_exact_for_the_interpolant() {
        let tol = Tolerances::default();
        let sol = dop853(|t, _: &[f64; 1]| [t.cos()], 0.0, [0.0], 2.0, &tol, no_stop).unwrap();
        // integral of sin on [0, 2] = 1 - cos 2
        let total: f64 = sol
            .segments
            .iter()
            .map(|s| s.integral_from_start(s.t_end())[0])
            .sum();
        assert!((total - (1.0 - 2.0f64.cos())).abs() < 1e-10);
    }

    #[test]
    fn stop_predicate_ends_leg() {
        let tol = Tolerances::default();
        let sol = dop853(|_, _: &[f64; 1]| [1.0], 0.0, [0.0], 10.0, &tol, |_, y| y[0] > 1.0).unwrap();
        assert_eq!(sol.end, LegEnd::Stopped);
        assert!(sol.states.last().unwrap()[0] > 1.0);
    }

    #[test]
    fn blow_up_is_reported() {
        let tol = Tolerances::default();
        let err = dop853(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &tol, no_stop);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_bad_tolerances() {
        let tol = Tolerances {
            rel: 0.0,
            ..Tolerances::default()
        };
        assert!(dop853(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0, &tol, no_stop).is_err());
    }
}

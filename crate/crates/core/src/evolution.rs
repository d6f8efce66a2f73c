//! Curvature growth under the self-similar flow: the zero set of `dR/dt`,
//! its intersections with `S`, the `Ψ_t` barrier test and pointwise histories.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dop853, Tolerances};
use crate::phase::{vector_field, PhasePoint, SolitonSign};
use crate::separatrix::Separatrix;

/// Flow time `t ∈ (−1, ∞)` and `s = t + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeParam {
    pub t: f64,
    pub s: f64,
}

impl TimeParam {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > -1.0) || !t.is_finite() {
            return Err(Error::Domain(format!("flow time must exceed -1, got {t}")));
        }
        Ok(Self { t, s: t + 1.0 })
    }
}

/// `C_t(x, y) = (2xy − x² + 1) + s·y²(−2xy + 2x² − 1)` with `(x, y) = (H, F)`.
pub fn ct(x: f64, y: f64, tp: TimeParam) -> f64 {
    (2.0 * x * y - x * x + 1.0) + tp.s * y * y * (-2.0 * x * y + 2.0 * x * x - 1.0)
}

pub fn grad_ct(x: f64, y: f64, tp: TimeParam) -> [f64; 2] {
    let s = tp.s;
    [
        2.0 * y - 2.0 * x + s * y * y * (-2.0 * y + 4.0 * x),
        2.0 * x + 2.0 * s * y * (-3.0 * x * y + 2.0 * x * x - 1.0),
    ]
}

/// `∂R/∂t` at a point whose phase coordinates are `p`.
pub fn dr_dt(p: PhasePoint, tp: TimeParam) -> f64 {
    2.0 * ct(p.h_prime, p.f_prime, tp) / (tp.s * tp.s)
}

/// Scalar curvature of `g(t)` at a point with phase coordinates `p`.
pub fn scalar_at(p: PhasePoint, tp: TimeParam) -> f64 {
    let hp = vector_field(p, SolitonSign::Expanding).h_second;
    (-4.0 * hp - 6.0 * p.h_prime * p.h_prime) / tp.s
}

/// Negative endpoint `−1/√s` of the branch domain.
pub fn branch_endpoint(tp: TimeParam) -> f64 {
    -1.0 / tp.s.sqrt()
}

/// The root `x(y) > 0` of `C_t(·, y) = 0` for `y ≤ −1/√s`.
pub fn ct_branch_x(y: f64, tp: TimeParam) -> Result<f64> {
    let s = tp.s;
    let c = 1.0 - s * y * y;
    if c > 1e-14 || !y.is_finite() || y >= 0.0 {
        return Err(Error::Domain(format!(
            "y = {y} outside the branch domain y <= {}",
            branch_endpoint(tp)
        )));
    }
    if c >= 0.0 {
        // endpoint (up to rounding): double root at x = 0
        return Ok(0.0);
    }
    let a = 2.0 * s * y * y - 1.0;
    let beta = y * c;
    let disc = beta * beta - a * c;
    if disc < 0.0 {
        return Err(Error::Domain(format!("negative discriminant at y = {y}")));
    }
    // conjugate form of (−β + √D)/a, free of cancellation for large |y|
    let den = -beta - disc.sqrt();
    if den == 0.0 {
        return if c == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain(format!("singular branch at y = {y}")))
        };
    }
    Ok(c / den)
}

/// `Ψ_t(y)` through the form `−y(x² + s(w(3u + 1 − 6x²) + 8x⁴))`, where
/// `u = xy` and `w = 1 + 2u = (x² − 2su²)/(1 − sy²)` on the curve.
pub fn psi(y: f64, tp: TimeParam) -> Result<f64> {
    let x = ct_branch_x(y, tp)?;
    let s = tp.s;
    let c = 1.0 - s * y * y;
    if c.abs() < 1e-3 {
        return Ok(psi_literal_at(x, y, tp));
    }
    let u = x * y;
    let w = (x * x - 2.0 * s * u * u) / c;
    Ok(-y * (x * x + s * (w * (3.0 * u + 1.0 - 6.0 * x * x) + 8.0 * x.powi(4))))
}

fn psi_literal_at(x: f64, y: f64, tp: TimeParam) -> f64 {
    let inner =
        6.0 * x * x * y * y - 12.0 * x.powi(3) * y + 5.0 * x * y + 8.0 * x.powi(4) - 6.0 * x * x + 1.0;
    -y * (x * x + tp.s * inner)
}

/// `Ψ_t` as the literal polynomial on the branch.
pub fn psi_literal(y: f64, tp: TimeParam) -> Result<f64> {
    Ok(psi_literal_at(ct_branch_x(y, tp)?, y, tp))
}

/// `⟨grad C_t, V⟩` at `(x(y), y)`.
pub fn psi_from_field(y: f64, tp: TimeParam) -> Result<f64> {
    let x = ct_branch_x(y, tp)?;
    let g = grad_ct(x, y, tp);
    let v = vector_field(PhasePoint::new(x, y), SolitonSign::Expanding);
    Ok(g[0] * v.h_second + g[1] * v.f_second)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiVerdict {
    Positive,
    SignChanging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiScan {
    pub t: f64,
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    pub min_value: f64,
    pub argmin_y: f64,
    /// Coefficient `k` of the tail `Ψ ≈ k/|y|` as `y → −∞`.
    pub tail_coefficient: f64,
    pub verdict: PsiVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiGrid {
    pub points: usize,
    pub y_max: f64,
}

impl Default for PsiGrid {
    fn default() -> Self {
        Self {
            points: 1000,
            y_max: 1e3,
        }
    }
}

/// Ψ on a grid logarithmic in `|y|` from the branch endpoint to `y_max`, plus
/// the sign of the leading tail term `−t/(4|y|)`.
pub fn psi_scan(tp: TimeParam, grid: &PsiGrid) -> Result<PsiScan> {
    let lo = -branch_endpoint(tp);
    if !(grid.y_max > lo) || grid.points < 2 {
        return Err(Error::Domain(format!(
            "psi grid needs y_max > {lo} and at least two points"
        )));
    }
    let n = grid.points;
    let ys: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                -lo
            } else {
                -(lo * (grid.y_max / lo).powf(k as f64 / (n - 1) as f64))
            }
        })
        .collect();
    let vals = ys.iter().map(|&y| psi(y, tp)).collect::<Result<Vec<_>>>()?;
    let (argmin_y, min_value) = ys
        .iter()
        .copied()
        .zip(vals.iter().copied())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let tail_coefficient = -tp.t / 4.0;
    let verdict = if min_value > 0.0 && tail_coefficient > 0.0 {
        PsiVerdict::Positive
    } else {
        PsiVerdict::SignChanging
    };
    Ok(PsiScan {
        t: tp.t,
        y: ys,
        psi: vals,
        min_value,
        argmin_y,
        tail_coefficient,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub r: f64,
    pub h: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub t: f64,
    pub crossings: Vec<Crossing>,
    /// Sign of `C_t` on each stretch of `S` between crossings, from the saddle.
    pub sign_pattern: Vec<i8>,
    /// Sign of `C_t` along `S` as `r → ∞`, from the exact expansion.
    pub limit_sign: Option<i8>,
    /// Smallest `y = −1/F` scanned through the expansion.
    pub y_min: f64,
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

const CROSSING_R_RESOLUTION: f64 = 1e-9;
const FAR_SCAN_POINTS: usize = 2000;
const FAR_Y_MIN: f64 = 1e-6;

/// Sign changes of `C_t` along `S`: dense output up to the far-field hand-over,
/// the exact expansion beyond it.
pub fn find_crossings(sep: &Separatrix, tp: TimeParam) -> CrossingReport {
    let orbit = &sep.orbit;
    let ff = &sep.far_field;
    let r_stop = if ff.r_switch.is_finite() {
        ff.r_switch
    } else {
        orbit.r_max()
    };
    let c_at = |r: f64| {
        let p = orbit.eval(r).expect("inside orbit range");
        ct(p.h_prime, p.f_prime, tp)
    };

    let mut crossings = Vec::new();
    let mut pattern = Vec::new();
    let grid: Vec<(f64, PhasePoint)> = orbit
        .dense_grid_upto(8, r_stop)
        .into_iter()
        .filter(|(r, _)| *r <= r_stop)
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for (r, p) in grid.into_iter().chain(std::iter::once((
        r_stop,
        orbit.eval(r_stop).unwrap_or(orbit.last()),
    ))) {
        let c = ct(p.h_prime, p.f_prime, tp);
        if c == 0.0 {
            continue;
        }
        if pattern.is_empty() {
            pattern.push(sign_of(c));
        }
        if let Some((r0, c0)) = prev {
            if sign_of(c0) != sign_of(c) {
                let (mut lo, mut hi) = (r0, r);
                while hi - lo > CROSSING_R_RESOLUTION {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if sign_of(c_at(mid)) == sign_of(c0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let rc = 0.5 * (lo + hi);
                let pc = orbit.eval(rc).expect("inside orbit range");
                crossings.push(Crossing {
                    r: rc,
                    h: pc.h_prime,
                    f: pc.f_prime,
                });
                pattern.push(sign_of(c));
            }
        }
        prev = Some((r, c));
    }

    if ff.r_switch.is_finite() {
        let y_hi = ff.y_switch;
        let ys: Vec<f64> = (0..FAR_SCAN_POINTS)
            .map(|k| y_hi * (FAR_Y_MIN / y_hi).powf(k as f64 / (FAR_SCAN_POINTS - 1) as f64))
            .collect();
        let mut prev_y: Option<(f64, f64)> = prev.map(|(_, c)| (y_hi, c));
        for y in ys.into_iter().skip(1) {
            let c = ff.ct_at(y, tp.s);
            if c == 0.0 {
                continue;
            }
            if let Some((y0, c0)) = prev_y {
                if sign_of(c0) != sign_of(c) {
                    let (mut a, mut b) = (y0, y);
                    // resolve in r, which is about 2/y
                    while (ff.r_at(b) - ff.r_at(a)).abs() > CROSSING_R_RESOLUTION {
                        let mid = 0.5 * (a + b);
                        if mid <= a.min(b) || mid >= a.max(b) {
                            break;
                        }
                        if sign_of(ff.ct_at(mid, tp.s)) == sign_of(c0) {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    let yc = 0.5 * (a + b);
                    let p = ff.point_at(yc);
                    crossings.push(Crossing {
                        r: ff.r_at(yc),
                        h: p.h_prime,
                        f: p.f_prime,
                    });
                    pattern.push(sign_of(c));
                }
            }
            prev_y = Some((y, c));
        }
    }

    CrossingReport {
        t: tp.t,
        crossings,
        sign_pattern: pattern,
        limit_sign: ff.ct_limit_sign(tp.s).map(sign_of),
        y_min: FAR_Y_MIN,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub crossings: usize,
    pub psi_verdict: PsiVerdict,
    pub psi_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub grid: Vec<SweepRow>,
    /// `(largest t without crossings, smallest t with one)`, refined.
    pub crossing_bracket: Option<(f64, f64)>,
    /// `(largest t with Ψ > 0, smallest t where Ψ changes sign)`, refined.
    pub barrier_bracket: Option<(f64, f64)>,
}

pub const DELTA_WIDTH: f64 = 1e-4;

fn refine<F: Fn(f64) -> bool + Sync>(lo: f64, hi: f64, is_low: F) -> (f64, f64) {
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > DELTA_WIDTH {
        let mid = 0.5 * (lo + hi);
        if is_low(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn bracket<F: Fn(&SweepRow) -> bool>(rows: &[SweepRow], is_low: F) -> Option<(f64, f64)> {
    let lo = rows
        .iter()
        .filter(|r| is_low(r))
        .map(|r| r.t)
        .fold(f64::NAN, f64::max);
    let hi = rows
        .iter()
        .filter(|r| !is_low(r) && r.t > lo)
        .map(|r| r.t)
        .fold(f64::NAN, f64::min);
    (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

/// Brackets the largest flow time before `C_t` meets `S`, and separately the
/// time where the `Ψ_t` barrier argument stops applying.
pub fn scan_delta_threshold(sep: &Separatrix, t_grid: &[f64], psi_grid: &PsiGrid) -> Result<DeltaEstimate> {
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let tp = TimeParam::new(t)?;
            let scan = psi_scan(tp, psi_grid)?;
            Ok(SweepRow {
                t,
                crossings: find_crossings(sep, tp).crossings.len(),
                psi_verdict: scan.verdict,
                psi_min: scan.min_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = rows;
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));

    let crossing_bracket = bracket(&rows, |r| r.crossings == 0).map(|(lo, hi)| {
        refine(lo, hi, |t| {
            TimeParam::new(t).is_ok_and(|tp| find_crossings(sep, tp).crossings.is_empty())
        })
    });
    let barrier_bracket = bracket(&rows, |r| r.psi_verdict == PsiVerdict::Positive).map(|(lo, hi)| {
        refine(lo, hi, |t| {
            TimeParam::new(t)
                .and_then(|tp| psi_scan(tp, psi_grid))
                .is_ok_and(|s| s.verdict == PsiVerdict::Positive)
        })
    });
    Ok(DeltaEstimate {
        grid: rows,
        crossing_bracket,
        barrier_bracket,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub t: f64,
    pub r: f64,
    pub scalar: f64,
    pub dr_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RHistory {
    pub r0: f64,
    pub rows: Vec<HistoryRow>,
    /// The flow line left the computed orbit before the end of the grid.
    pub truncated: bool,
    /// Largest time at which `∂R/∂t` changes sign.
    pub last_sign_change: Option<f64>,
}

/// Default history grid: linear on `(−1, 0]`, logarithmic up to `t_max`.
pub fn history_grid(t_max: f64, points: usize) -> Vec<f64> {
    let neg = points / 4;
    let pos = points - neg;
    let mut out: Vec<f64> = (1..=neg).map(|k| -1.0 + k as f64 / (neg + 1) as f64).collect();
    out.push(0.0);
    out.extend((1..pos).map(|k| (t_max + 1.0).powf(k as f64 / (pos - 1) as f64) - 1.0));
    out
}

/// Follows the point at `r0` along `ṙ = F(r)` and records `R[g(t)]` there.
pub fn pointwise_r_history(sep: &Separatrix, r0: f64, t_grid: &[f64]) -> Result<RHistory> {
    let orbit = &sep.orbit;
    let (r_lo, r_hi) = (orbit.r_min(), orbit.r_max());
    if !(r0 >= r_lo && r0 <= r_hi) {
        return Err(Error::OutOfRange {
            r: r0,
            lo: r_lo,
            hi: r_hi,
        });
    }
    for &t in t_grid {
        TimeParam::new(t)?;
    }
    let f_at = |r: f64| orbit.eval(r.clamp(r_lo, r_hi)).map_or(0.0, |p| p.f_prime);
    let rhs = |_: f64, y: &[f64; 1]| [f_at(y[0])];
    let tol = Tolerances {
        rel: 1e-10,
        abs: 1e-12,
        max_step: f64::INFINITY,
    };
    let out_of_range = |_: f64, y: &[f64; 1]| y[0] <= r_lo || y[0] >= r_hi;
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let t_min = t_grid.iter().copied().fold(0.0, f64::min);
    let fwd = dop853(rhs, 0.0, [r0], t_max, &tol, out_of_range)?;
    let bwd = dop853(rhs, 0.0, [r0], t_min, &tol, out_of_range)?;

    let r_of = |t: f64| -> Option<f64> {
        let sol = if t >= 0.0 { &fwd } else { &bwd };
        if t == 0.0 {
            return Some(r0);
        }
        let last = *sol.times.last()?;
        if (t >= 0.0 && t > last) || (t < 0.0 && t < last) {
            return None;
        }
        let i = sol
            .times
            .partition_point(|&x| if t >= 0.0 { x < t } else { x > t });
        let seg = &sol.segments[i.saturating_sub(1).min(sol.segments.len() - 1)];
        Some(seg.eval(t)[0])
    };

    let mut rows = Vec::new();
    let mut truncated = false;
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for &t in &grid {
        let Some(r) = r_of(t).filter(|r| *r > r_lo && *r < r_hi) else {
            truncated = true;
            continue;
        };
        let tp = TimeParam::new(t)?;
        let p = orbit.eval(r)?;
        rows.push(HistoryRow {
            t,
            r,
            scalar: scalar_at(p, tp),
            dr_dt: dr_dt(p, tp),
        });
    }

    let mut last_sign_change = None;
    for w in rows.windows(2) {
        if sign_of(w[0].dr_dt) != sign_of(w[1].dr_dt) {
            let (mut lo, mut hi) = (w[0].t, w[1].t);
            let sign_lo = sign_of(w[0].dr_dt);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let v = r_of(mid)
                    .and_then(|r| orbit.eval(r).ok())
                    .map(|p| dr_dt(p, TimeParam { t: mid, s: mid + 1.0 }));
                match v {
                    Some(v) if sign_of(v) == sign_lo => lo = mid,
                    _ => hi = mid,
                }
            }
            last_sign_change = Some(0.5 * (lo + hi));
        }
    }
    Ok(RHistory {
        r0,
        rows,
        truncated,
        last_sign_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(t: f64) -> TimeParam {
        TimeParam::new(t).unwrap()
    }

    #[test]
    fn time_domain() {
        assert!(TimeParam::new(-1.0).is_err());
        assert!(TimeParam::new(-0.999).is_ok());
    }

    #[test]
    fn ct_examples() {
        let t = tp(0.5);
        assert!(ct(0.0, branch_endpoint(t), t).abs() < 1e-15);
        assert_eq!(ct(0.5, 0.0, t), 0.75);
        assert_eq!(ct(1.0, 1.0, tp(0.0)), 1.0);
        assert_eq!(grad_ct(0.0, 0.0, t), [0.0, 0.0]);
        assert_eq!(grad_ct(0.5, 0.0, t), [-1.0, 1.0]);
    }

    #[test]
    fn dr_dt_at_the_cusp_soliton() {
        for t in [-0.5, 0.0, 2.0] {
            let v = dr_dt(PhasePoint::SADDLE, tp(t));
            assert!((v - 1.5 / (t + 1.0f64).powi(2)).abs() < 1e-15);
        }
        let t = tp(0.0);
        for y in [-2.0, 0.3, 1.7] {
            assert!((dr_dt(PhasePoint::new(0.0, y), t) - 2.0 * (1.0 - y * y)).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_is_a_root() {
        for t in [-0.7, -0.2, 0.0, 1.0, 10.0] {
            let p = tp(t);
            let y0 = branch_endpoint(p);
            assert!(ct_branch_x(y0, p).unwrap().abs() < 1e-7);
            for k in 1..200 {
                let y = y0 * (1.0 + 0.05 * k as f64);
                let x = ct_branch_x(y, p).unwrap();
                assert!(x > 0.0, "x = {x} at y = {y}, t = {t}");
                assert!(ct(x, y, p).abs() < 1e-10, "t = {t}, y = {y}");
            }
        }
        assert!(ct_branch_x(-0.1, tp(0.0)).is_err());
        assert!(ct_branch_x(-2.0, tp(10.0)).unwrap() > 0.0);
    }

    #[test]
    fn psi_forms_agree() {
        for t in [-0.7, -0.2, 1.0, 10.0] {
            let p = tp(t);
            let y0 = branch_endpoint(p);
            for k in 0..50 {
                let y = y0 * (1.0 + 0.2 * k as f64);
                let a = psi(y, p).unwrap();
                let b = psi_literal(y, p).unwrap();
                let c = psi_from_field(y, p).unwrap();
                assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "t={t} y={y}: {a} vs {b}");
                assert!((c - b).abs() < 1e-8 * (1.0 + b.abs()), "t={t} y={y}: {c} vs {b}");
            }
        }
    }

    #[test]
    fn psi_tail() {
        for t in [-0.7, -0.2, 3.0] {
            let p = tp(t);
            let y = -1e6;
            let v = psi(y, p).unwrap();
            assert!((v * y.abs() - (-t / 4.0)).abs() < 1e-3 * t.abs());
        }
    }

    #[test]
    fn grid_shape() {
        let g = history_grid(100.0, 40);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > -1.0);
        assert!((g.last().unwrap() - 100.0).abs() < 1e-9);
    }
}

//! Metric profiles `h`, `f`, curvature data and the soliton identities along an
//! orbit of the phase system.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase::{vector_field, PhasePoint, SolitonSign, Trajectory};

/// `h` and `f` co-sampled with a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricProfile {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub f: Vec<f64>,
    /// `h` at `r = 0` (or at the first sample when 0 is out of range).
    pub h_anchor: f64,
    pub anchor_r: f64,
    /// Limit of `f` at the cusp end.
    pub f0: f64,
    /// Estimated `∫_{-∞}^{r_min} F`.
    pub f_tail: f64,
    /// Estimated `lim (h − r/2)` at the cusp end.
    pub cusp_offset: f64,
    cum_h: Vec<f64>,
    cum_f: Vec<f64>,
}

/// Exponential tail `∫_{-∞}^{r} g` for `g` decaying at the rate `F'/F`.
fn exp_tail(g: f64, p: PhasePoint) -> f64 {
    let v = vector_field(p, SolitonSign::Expanding);
    if p.f_prime == 0.0 || v.f_second == 0.0 {
        return 0.0;
    }
    let rate = v.f_second / p.f_prime;
    if rate > 0.0 {
        g / rate
    } else {
        0.0
    }
}

pub fn reconstruct_profiles(traj: &Trajectory, h_anchor: f64, f0: f64) -> Result<MetricProfile> {
    let r = traj.r();
    if r.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::NonMonotone);
    }
    let n = r.len();
    let mut cum_h = vec![0.0; n];
    let mut cum_f = vec![0.0; n];
    for i in 1..n {
        let seg = traj.integral_in_segment(i - 1, r[i]);
        cum_h[i] = cum_h[i - 1] + seg[0];
        cum_f[i] = cum_f[i - 1] + seg[1];
    }
    let anchor_r = if r[0] <= 0.0 && 0.0 <= r[n - 1] { 0.0 } else { r[0] };
    let at_anchor = if n > 1 {
        let k = traj.segment_index(anchor_r)?;
        cum_h[k] + traj.integral_in_segment(k, anchor_r)[0]
    } else {
        0.0
    };
    let first = traj.first();
    let f_tail = exp_tail(first.f_prime, first);
    let h = cum_h.iter().map(|c| h_anchor + c - at_anchor).collect::<Vec<_>>();
    let f = cum_f.iter().map(|c| f0 + f_tail + c).collect();
    let cusp_offset = h[0] - 0.5 * r[0] - exp_tail(first.h_prime - 0.5, first);
    Ok(MetricProfile {
        r: r.to_vec(),
        h,
        f,
        h_anchor,
        anchor_r,
        f0,
        f_tail,
        cusp_offset,
        cum_h,
        cum_f,
    })
}

impl MetricProfile {
    /// `(h, f)` at any `r` in the trajectory's range.
    pub fn eval(&self, traj: &Trajectory, r: f64) -> Result<(f64, f64)> {
        if self.r.len() == 1 {
            return Ok((self.h[0], self.f[0]));
        }
        let k = traj.segment_index(r)?;
        let seg = traj.integral_in_segment(k, r);
        let dh = self.h[0] - self.cum_h[0];
        let df = self.f[0] - self.cum_f[0];
        Ok((dh + self.cum_h[k] + seg[0], df + self.cum_f[k] + seg[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub r: f64,
    pub sec_xy: f64,
    pub sec_rx: f64,
    pub scalar: f64,
    pub ric_rr: f64,
    pub ric_tangential: f64,
    pub laplacian_f: f64,
    pub grad_f_sq: f64,
}

pub fn curvature_at(r: f64, p: PhasePoint) -> CurvatureSample {
    let (h, f) = (p.h_prime, p.f_prime);
    let v = vector_field(p, SolitonSign::Expanding);
    let hp = v.h_second;
    CurvatureSample {
        r,
        sec_xy: -h * h,
        sec_rx: -(h * h + hp),
        scalar: -4.0 * hp - 6.0 * h * h,
        ric_rr: -2.0 * (h * h + hp),
        ric_tangential: -(hp + 2.0 * h * h),
        laplacian_f: 2.0 * h * f + v.f_second,
        grad_f_sq: f * f,
    }
}

/// `sec_rx` through `F'`: `−(F' + 1/2)/2`.
pub fn sec_rx_from_f(p: PhasePoint) -> f64 {
    -0.5 * (vector_field(p, SolitonSign::Expanding).f_second + 0.5)
}

pub fn curvatures(traj: &Trajectory) -> Vec<CurvatureSample> {
    traj.samples().map(|(r, p)| curvature_at(r, p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonResiduals {
    pub r: f64,
    /// `R + Δf + 3/2`
    pub trace: f64,
    /// `R' − 2·Ric_rr·F`
    pub gradient: f64,
    /// `Q(r) − Q(anchor)` with `Q = R + |∇f|² + f`
    pub conserved: f64,
}

fn scalar_derivative(p: PhasePoint) -> f64 {
    let (h, f) = (p.h_prime, p.f_prime);
    let v = vector_field(p, SolitonSign::Expanding);
    let h2 = v.h_second * f + h * v.f_second - 4.0 * h * v.h_second;
    -4.0 * h2 - 12.0 * h * v.h_second
}

pub fn soliton_residuals(traj: &Trajectory, profile: &MetricProfile) -> Result<Vec<SolitonResiduals>> {
    if profile.r.len() != traj.len() {
        return Err(Error::Domain(
            "profile is not co-sampled with the trajectory".into(),
        ));
    }
    let q_of = |p: PhasePoint, f: f64| curvature_at(0.0, p).scalar + p.f_prime * p.f_prime + f;
    let (_, f_anchor) = profile.eval(traj, profile.anchor_r)?;
    let q_anchor = q_of(traj.eval(profile.anchor_r)?, f_anchor);
    Ok(traj
        .samples()
        .zip(&profile.f)
        .map(|((r, p), &f)| {
            let c = curvature_at(r, p);
            SolitonResiduals {
                r,
                trace: c.scalar + c.laplacian_f + 1.5,
                gradient: scalar_derivative(p) - 2.0 * c.ric_rr * p.f_prime,
                conserved: q_of(p, f) - q_anchor,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Cusp,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEntry {
    pub name: &'static str,
    pub r: f64,
    pub measured: f64,
    pub target: f64,
    /// Target constant written out, e.g. `3+sqrt(5)`.
    pub target_label: &'static str,
    pub residual: f64,
    pub relative_residual: f64,
    /// False when `r` lies outside the computed range.
    pub in_range: bool,
}

impl RatioEntry {
    fn new(name: &'static str, r: f64, measured: Option<f64>, target: f64, label: &'static str) -> Self {
        let (measured, in_range) = match measured {
            Some(m) => (m, true),
            None => (f64::NAN, false),
        };
        let residual = measured - target;
        Self {
            name,
            r,
            measured,
            target,
            target_label: label,
            residual,
            relative_residual: if target != 0.0 {
                residual / target
            } else {
                residual
            },
            in_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub r_lo: f64,
    pub r_hi: f64,
    pub alpha: f64,
    pub target: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub end: End,
    pub entries: Vec<RatioEntry>,
    /// Cusp end: slope of `ln|F|` against `r`.
    pub decay_fit: Option<DecayFit>,
    /// Flat end: `|H·r − 1|` decreases over the trend window.
    pub hr_trend_decreasing: Option<bool>,
}

impl AsymptoticsReport {
    pub fn entry(&self, name: &str) -> Option<&RatioEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn range_sufficient(&self) -> bool {
        self.entries.iter().all(|e| e.in_range)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticProbes {
    pub cusp_r: f64,
    pub flat_r: f64,
    pub fit_range: (f64, f64),
    pub trend_range: (f64, f64),
}

impl Default for AsymptoticProbes {
    fn default() -> Self {
        Self {
            cusp_r: -30.0,
            flat_r: 500.0,
            fit_range: (-30.0, -10.0),
            trend_range: (50.0, 500.0),
        }
    }
}

pub const SQRT5: f64 = 2.236_067_977_499_79;

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn check_asymptotics(
    traj: &Trajectory,
    profile: &MetricProfile,
    probes: &AsymptoticProbes,
) -> Vec<AsymptoticsReport> {
    vec![
        cusp_report(traj, profile, probes),
        flat_report(traj, profile, probes),
    ]
}

fn cusp_report(traj: &Trajectory, profile: &MetricProfile, probes: &AsymptoticProbes) -> AsymptoticsReport {
    let r = probes.cusp_r;
    let at = traj.eval(r).ok();
    let hf = profile.eval(traj, r).ok();
    let target = 3.0 + SQRT5;
    let offset = |h: f64| h - 0.5 * r - profile.cusp_offset;
    let entries = vec![
        RatioEntry::new("h/(r/2)", r, hf.map(|(h, _)| h / (0.5 * r)), 1.0, "1"),
        RatioEntry::new(
            "(h-r/2)/(f-f0)",
            r,
            hf.map(|(h, f)| offset(h) / (f - profile.f0)),
            target,
            "3+sqrt(5)",
        ),
        RatioEntry::new(
            "(f-f0)/(h-r/2)",
            r,
            hf.map(|(h, f)| (f - profile.f0) / offset(h)),
            target,
            "3+sqrt(5)",
        ),
        RatioEntry::new(
            "F/(H-1/2)",
            r,
            at.map(|p| p.f_prime / (p.h_prime - 0.5)),
            target,
            "3+sqrt(5)",
        ),
    ];
    let (lo, hi) = probes.fit_range;
    let decay_fit = (lo >= traj.r_min() && hi <= traj.r_max()).then(|| {
        let n = 201;
        let xs: Vec<f64> = (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| traj.eval(x).map_or(f64::NAN, |p| p.f_prime.abs().ln()))
            .collect();
        let alpha = least_squares_slope(&xs, &ys);
        let target = 0.5 * (SQRT5 - 1.0);
        DecayFit {
            r_lo: lo,
            r_hi: hi,
            alpha,
            target,
            residual: alpha - target,
        }
    });
    AsymptoticsReport {
        end: End::Cusp,
        entries,
        decay_fit,
        hr_trend_decreasing: None,
    }
}

fn flat_report(traj: &Trajectory, profile: &MetricProfile, probes: &AsymptoticProbes) -> AsymptoticsReport {
    let r = probes.flat_r;
    let at = traj.eval(r).ok();
    let hf = profile.eval(traj, r).ok();
    let fp = |p: PhasePoint| vector_field(p, SolitonSign::Expanding).f_second;
    let entries = vec![
        RatioEntry::new("H*r", r, at.map(|p| p.h_prime * r), 1.0, "1"),
        RatioEntry::new("F/(-r/2)", r, at.map(|p| p.f_prime / (-0.5 * r)), 1.0, "1"),
        RatioEntry::new("H*F", r, at.map(|p| p.h_prime * p.f_prime), -0.5, "-1/2"),
        RatioEntry::new("F'", r, at.map(fp), -0.5, "-1/2"),
        RatioEntry::new("h/ln(r)", r, hf.map(|(h, _)| h / r.ln()), 1.0, "1"),
        RatioEntry::new("f/(-r^2/4)", r, hf.map(|(_, f)| f / (-0.25 * r * r)), 1.0, "1"),
        RatioEntry::new("H/F", r, at.map(|p| p.h_prime / p.f_prime), 0.0, "0"),
    ];
    let (lo, hi) = probes.trend_range;
    let hr_trend_decreasing = (lo >= traj.r_min() && hi <= traj.r_max() && lo > 0.0).then(|| {
        let n = 64;
        let dev: Vec<f64> = (0..n)
            .map(|k| {
                let x = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
                traj.eval(x).map_or(f64::NAN, |p| (p.h_prime * x - 1.0).abs())
            })
            .collect();
        dev.windows(2).all(|w| w[1] < w[0])
    });
    AsymptoticsReport {
        end: End::Flat,
        entries,
        decay_fit: None,
        hr_trend_decreasing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{integrate, IntegratorControls};

    fn cusp_soliton() -> Trajectory {
        let controls = IntegratorControls {
            r_min: -10.0,
            r_max: 10.0,
            ..Default::default()
        };
        integrate(PhasePoint::SADDLE, 0.0, &controls, SolitonSign::Expanding).unwrap()
    }

    #[test]
    fn hyperbolic_cusp_profiles() {
        let traj = cusp_soliton();
        let prof = reconstruct_profiles(&traj, 1.25, -2.0).unwrap();
        for ((r, h), f) in prof.r.iter().zip(&prof.h).zip(&prof.f) {
            assert!((h - (1.25 + 0.5 * r)).abs() < 1e-13);
            assert_eq!(*f, -2.0);
        }
        let (h, _) = prof.eval(&traj, 3.3).unwrap();
        assert!((h - (1.25 + 1.65)).abs() < 1e-13);
    }

    #[test]
    fn saddle_curvatures() {
        let c = curvature_at(0.0, PhasePoint::SADDLE);
        assert_eq!(c.sec_xy, -0.25);
        assert_eq!(c.sec_rx, -0.25);
        assert_eq!(c.scalar, -1.5);
        assert_eq!(sec_rx_from_f(PhasePoint::SADDLE), -0.25);
    }

    #[test]
    fn identities_hold_on_arbitrary_points() {
        for &(h, f) in &[(0.3, -0.7), (1.2, 2.0), (-0.4, 0.1), (0.01, -50.0)] {
            let p = PhasePoint::new(h, f);
            let c = curvature_at(0.0, p);
            assert!((c.scalar + c.laplacian_f + 1.5).abs() < 1e-12);
            assert!((scalar_derivative(p) - 2.0 * c.ric_rr * f).abs() < 1e-10);
            assert!((c.sec_rx - sec_rx_from_f(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_fit() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        assert!((least_squares_slope(&xs, &ys) - 2.0).abs() < 1e-15);
    }
}

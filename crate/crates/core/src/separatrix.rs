//! The separatrix `S` leaving the saddle `(1/2, 0)` towards `{H < 1/2, F < 0}`,
//! its exact far-field expansion, and the isocline barriers that confine it.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::chart_to_infinity;
use crate::blowup::poly::{rat_to_f64, Rational};
use crate::blowup::series::FarFieldSeries;
use crate::error::{Error, Result};
use crate::phase::{
    eigen_saddle, integrate, linearize, vector_field, IntegratorControls, PhasePoint, SolitonSign, StopRule,
    Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IsoclineKind {
    Vertical,
    Horizontal,
    Oblique,
}

impl IsoclineKind {
    pub const ALL: [IsoclineKind; 3] = [
        IsoclineKind::Vertical,
        IsoclineKind::Horizontal,
        IsoclineKind::Oblique,
    ];

    fn multiplier(self) -> f64 {
        match self {
            IsoclineKind::Vertical => 1.0,
            IsoclineKind::Horizontal => 0.5,
            IsoclineKind::Oblique => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IsoclineKind::Vertical => "vertical",
            IsoclineKind::Horizontal => "horizontal",
            IsoclineKind::Oblique => "oblique",
        }
    }
}

fn nonzero_h(h: f64) -> Result<()> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Domain(format!("isoclines need finite H != 0, got {h}")));
    }
    Ok(())
}

/// `F` on the isocline branch over `H`: `k·(2H − 1/(2H))`.
pub fn isocline_f(kind: IsoclineKind, h: f64) -> Result<f64> {
    nonzero_h(h)?;
    Ok(kind.multiplier() * (2.0 * h - 0.5 / h))
}

/// Tangent slopes `dF/dH` of the vertical, horizontal and oblique isoclines at
/// the saddle.
pub fn isocline_slopes_at_saddle() -> (f64, f64, f64) {
    // d/dH (2H - 1/(2H)) = 2 + 1/(2H^2) = 4 at H = 1/2
    let base = 2.0 + 0.5 / 0.25;
    (
        IsoclineKind::Vertical.multiplier() * base,
        IsoclineKind::Horizontal.multiplier() * base,
        IsoclineKind::Oblique.multiplier() * base,
    )
}

/// Normal product of the field with the oblique isocline, `−2H² + 1/(2H²) − 3/2`.
pub fn oblique_barrier_margin(h: f64) -> Result<f64> {
    nonzero_h(h)?;
    Ok(-2.0 * h * h + 0.5 / (h * h) - 1.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootConfig {
    /// Distance from the saddle along the unstable eigenvector.
    pub offset: f64,
    /// `+1` leaves towards `H < 1/2`, `−1` towards `H > 1/2`.
    pub direction: f64,
    /// Tolerances and step cap; the range and stop fields are set by the shooter.
    pub controls: IntegratorControls,
    pub h_floor: f64,
    pub saddle_radius: f64,
    /// Forward range, measured from the `F = −1` anchor.
    pub r_max: f64,
    /// `|F|` beyond which the far-field expansion takes over.
    pub f_switch: f64,
    pub series_order: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            offset: 1e-8,
            direction: 1.0,
            controls: IntegratorControls::default(),
            h_floor: 1e-6,
            saddle_radius: 1e-9,
            r_max: 2000.0,
            f_switch: 20.0,
            series_order: 24,
        }
    }
}

impl ShootConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidControls(m));
        if !(self.offset > 0.0) {
            return bad(format!("offset must be positive, got {}", self.offset));
        }
        if self.direction.abs() != 1.0 {
            return bad(format!("direction must be +1 or -1, got {}", self.direction));
        }
        if !(self.h_floor > 0.0 && self.saddle_radius > 0.0) {
            return bad("h_floor and saddle_radius must be positive".into());
        }
        if !(self.saddle_radius < self.offset) {
            return bad("saddle_radius must be below the offset".into());
        }
        if !(self.r_max > 0.0) {
            return bad(format!("r_max must be positive, got {}", self.r_max));
        }
        if !(self.f_switch > 1.0) {
            return bad(format!("f_switch must exceed 1, got {}", self.f_switch));
        }
        if self.series_order < 4 {
            return bad(format!(
                "series_order must be at least 4, got {}",
                self.series_order
            ));
        }
        self.controls.tolerances().validate()
    }
}

/// Exact expansion of `S` beyond `F = −f_switch`, in `y = −1/F`.
#[derive(Debug, Clone)]
pub struct FarField {
    pub exact: FarFieldSeries,
    phi: Vec<f64>,
    r_inverse: f64,
    r_positive: Vec<f64>,
    curve: Vec<(f64, f64)>,
    /// `y` at the hand-over point.
    pub y_switch: f64,
    pub r_switch: f64,
    /// Additive constant in `r(y) = 2/y + r_c + …`, matched at the hand-over.
    pub r_c: f64,
    /// `|H_series − H_orbit|` at the hand-over.
    pub match_error: f64,
}

impl FarField {
    fn new(exact: FarFieldSeries) -> Self {
        let phi = exact.phi.iter().map(rat_to_f64).collect();
        let r_inverse = rat_to_f64(&exact.r.inverse);
        let r_positive = exact.r.positive.iter().map(rat_to_f64).collect();
        let curve = exact
            .curve
            .iter()
            .map(|c| (rat_to_f64(&c.c0), rat_to_f64(&c.c1)))
            .collect();
        Self {
            exact,
            phi,
            r_inverse,
            r_positive,
            curve,
            y_switch: f64::NAN,
            r_switch: f64::NAN,
            r_c: 0.0,
            match_error: f64::NAN,
        }
    }

    fn horner(c: &[f64], y: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, a| acc * y + a)
    }

    /// `H = φ(y)/y` on the invariant graph.
    pub fn h_at(&self, y: f64) -> f64 {
        Self::horner(&self.phi[1..], y)
    }

    pub fn point_at(&self, y: f64) -> PhasePoint {
        PhasePoint::new(self.h_at(y), -1.0 / y)
    }

    fn r_unshifted(&self, y: f64) -> f64 {
        self.r_inverse / y + y * Self::horner(&self.r_positive, y)
    }

    pub fn r_at(&self, y: f64) -> f64 {
        self.r_unshifted(y) + self.r_c
    }

    fn dr_dy(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for (k, b) in self.r_positive.iter().enumerate().rev() {
            acc = acc * y + (k + 1) as f64 * b;
        }
        -self.r_inverse / (y * y) + acc
    }

    /// Inverse of [`FarField::r_at`] for `r ≥ r_switch`.
    pub fn y_at(&self, r: f64) -> f64 {
        let mut y = self.r_inverse / (r - self.r_c);
        for _ in 0..50 {
            let step = (self.r_at(y) - r) / self.dr_dy(y);
            y -= step;
            if step.abs() <= 4.0 * f64::EPSILON * y {
                break;
            }
        }
        y
    }

    /// `C_t` along `S` at `y`, from its exact series (`C_t = y^{-4}·Σ c_k y^k`).
    pub fn ct_at(&self, y: f64, s: f64) -> f64 {
        let mut acc = 0.0;
        for (c0, c1) in self.curve.iter().skip(4).rev() {
            acc = acc * y + (c0 + c1 * s);
        }
        acc
    }

    /// Sign of `C_t` along `S` as `r → ∞`, from the first non-vanishing exact
    /// coefficient. `None` if every computed coefficient vanishes.
    pub fn ct_limit_sign(&self, s: f64) -> Option<f64> {
        let s = Rational::from_float(s)?;
        self.exact
            .curve
            .iter()
            .map(|c| c.eval(&s))
            .find(|v| *v != Rational::from_integer(0.into()))
            .map(|v| {
                if v > Rational::from_integer(0.into()) {
                    1.0
                } else {
                    -1.0
                }
            })
    }
}

#[derive(Debug, Clone)]
pub struct Separatrix {
    pub orbit: Trajectory,
    pub far_field: FarField,
    pub config: ShootConfig,
    pub start: PhasePoint,
    /// Unit unstable direction at the saddle (pointing to `H > 1/2`).
    pub unstable_direction: [f64; 2],
    /// The backward leg reached the saddle's `saddle_radius` neighbourhood.
    pub reaches_saddle: bool,
}

impl Separatrix {
    /// `r` where `F = f` along the computed orbit (`F` is monotone on `S`).
    pub fn r_at_f(&self, f: f64) -> Option<f64> {
        r_where_f(&self.orbit, f)
    }

    pub fn eval(&self, r: f64) -> Result<PhasePoint> {
        self.orbit.eval(r)
    }
}

fn r_where_f(traj: &Trajectory, target: f64) -> Option<f64> {
    let pts = traj.points();
    let i = pts.iter().position(|p| p.f_prime <= target)?;
    if i == 0 {
        return (pts[0].f_prime == target).then(|| traj.r_min());
    }
    let (mut lo, mut hi) = (traj.r()[i - 1], traj.r()[i]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = traj.eval(mid).ok()?.f_prime;
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(
        if (traj.eval(lo).ok()?.f_prime - target).abs() < (traj.eval(hi).ok()?.f_prime - target).abs() {
            lo
        } else {
            hi
        },
    )
}

const SETUP_RANGE: f64 = 1e4;

/// Shoots `S` from the saddle and calibrates `r` so that `F(0) = −1`.
pub fn shoot_separatrix(cfg: &ShootConfig) -> Result<Separatrix> {
    cfg.validate()?;
    let sign = SolitonSign::Expanding;
    let [unstable, _] = eigen_saddle(&linearize(PhasePoint::SADDLE))?;
    let norm = unstable.vector[0].hypot(unstable.vector[1]);
    let dir = [unstable.vector[0] / norm, unstable.vector[1] / norm];
    let start = PhasePoint::new(
        0.5 - cfg.direction * cfg.offset * dir[0],
        -cfg.direction * cfg.offset * dir[1],
    );

    // Locate F = -1 to fix the origin of r.
    let probe = IntegratorControls {
        r_min: 0.0,
        r_max: SETUP_RANGE,
        forward_stops: vec![
            StopRule::FBelow(-1.0),
            StopRule::HBelow(0.0),
            StopRule::HAbove(0.5),
        ],
        backward_stops: Vec::new(),
        ..cfg.controls.clone()
    };
    let pre = integrate(start, 0.0, &probe, sign)?;
    let r_anchor = r_where_f(&pre, -1.0).ok_or_else(|| {
        let last = pre.last();
        Error::LeftBand {
            r: pre.r_max(),
            h: last.h_prime,
        }
    })?;

    let controls = IntegratorControls {
        r_min: -r_anchor - SETUP_RANGE,
        r_max: cfg.r_max,
        forward_stops: vec![StopRule::HBelow(cfg.h_floor)],
        backward_stops: vec![StopRule::WithinDistance {
            center: PhasePoint::SADDLE,
            radius: cfg.saddle_radius,
        }],
        ..cfg.controls.clone()
    };
    let mut orbit = integrate(start, -r_anchor, &controls, sign)?;
    // absorb the last rounding-level mismatch in the anchor
    if let Some(r0) = r_where_f(&orbit, -1.0) {
        orbit = orbit.shifted(-r0);
    }
    for (r, p) in orbit.samples() {
        if !(p.h_prime > 0.0 && p.h_prime < 0.5) {
            return Err(Error::LeftBand { r, h: p.h_prime });
        }
    }
    let reaches_saddle = matches!(orbit.lower_end(), crate::phase::Termination::Stop(_));

    let chart = chart_to_infinity();
    let mut far = FarField::new(FarFieldSeries::compute(
        &chart.p,
        &chart.q,
        &chart.curve,
        cfg.series_order,
    ));
    if let Some(r_switch) = r_where_f(&orbit, -cfg.f_switch) {
        let p = orbit.eval(r_switch)?;
        let y = -1.0 / p.f_prime;
        far.y_switch = y;
        far.r_switch = r_switch;
        far.r_c = r_switch - far.r_unshifted(y);
        far.match_error = (far.h_at(y) - p.h_prime).abs();
        let series = far.clone();
        orbit = orbit.with_tail(r_switch, Arc::new(move |r| series.point_at(series.y_at(r))));
    }

    Ok(Separatrix {
        orbit,
        far_field: far,
        config: cfg.clone(),
        start,
        unstable_direction: dir,
        reaches_saddle,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BarrierCurve {
    VerticalIsocline,
    HorizontalIsocline,
    ObliqueIsocline,
    /// `{F' = 0}`
    FPrimeZero,
    /// `{H² − HF − 1/2 = 0}`
    SecantCurvature,
}

impl BarrierCurve {
    pub const ALL: [BarrierCurve; 5] = [
        BarrierCurve::VerticalIsocline,
        BarrierCurve::HorizontalIsocline,
        BarrierCurve::ObliqueIsocline,
        BarrierCurve::FPrimeZero,
        BarrierCurve::SecantCurvature,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BarrierCurve::VerticalIsocline => "vertical_isocline",
            BarrierCurve::HorizontalIsocline => "horizontal_isocline",
            BarrierCurve::ObliqueIsocline => "oblique_isocline",
            BarrierCurve::FPrimeZero => "f_prime_zero",
            BarrierCurve::SecantCurvature => "h2_minus_hf_minus_half",
        }
    }

    /// Signed margin, positive on the side where `S` must stay.
    pub fn margin(self, p: PhasePoint) -> f64 {
        let (h, f) = (p.h_prime, p.f_prime);
        let v = vector_field(p, SolitonSign::Expanding);
        match self {
            // F_vert - F = -H'/H
            BarrierCurve::VerticalIsocline => -v.h_second / h,
            // F_hor - F = -F'/(2H)
            BarrierCurve::HorizontalIsocline => -v.f_second / (2.0 * h),
            // F - F_obl = F - 4H + 1/H
            BarrierCurve::ObliqueIsocline => f - 4.0 * h + 1.0 / h,
            BarrierCurve::FPrimeZero => -v.f_second,
            BarrierCurve::SecantCurvature => h * f + 0.5 - h * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Barrier,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub curve: BarrierCurve,
    /// `(r, margin)` over the dense scan.
    pub margins: Vec<(f64, f64)>,
    pub min_margin: f64,
    pub argmin_r: f64,
    pub verdict: Verdict,
}

pub const MIN_BARRIER_SAMPLES: usize = 10_000;

pub fn certify_barriers(sep: &Separatrix) -> Vec<BarrierReport> {
    let grid = sep.orbit.dense_grid_at_least(MIN_BARRIER_SAMPLES);
    BarrierCurve::ALL
        .par_iter()
        .map(|&curve| {
            let margins: Vec<(f64, f64)> = grid.iter().map(|&(r, p)| (r, curve.margin(p))).collect();
            let (argmin_r, min_margin) = margins
                .iter()
                .copied()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((f64::NAN, f64::NAN));
            BarrierReport {
                curve,
                margins,
                min_margin,
                argmin_r,
                verdict: if min_margin > 0.0 {
                    Verdict::Barrier
                } else {
                    Verdict::Violated
                },
            }
        })
        .collect()
}

//! The soliton phase plane: vector field, critical points, linearization and
//! the trajectory type shared by every downstream computation.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dop853, DenseSegment, LegEnd, Tolerances};

/// Normalized sign of the soliton constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolitonSign {
    Shrinking,
    Steady,
    Expanding,
}

impl SolitonSign {
    pub fn eps(self) -> f64 {
        match self {
            SolitonSign::Shrinking => -1.0,
            SolitonSign::Steady => 0.0,
            SolitonSign::Expanding => 1.0,
        }
    }
}

impl TryFrom<i32> for SolitonSign {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        match v {
            -1 => Ok(SolitonSign::Shrinking),
            0 => Ok(SolitonSign::Steady),
            1 => Ok(SolitonSign::Expanding),
            _ => Err(Error::Domain(format!("soliton sign must be -1, 0 or 1, got {v}"))),
        }
    }
}

/// A point `(H, F) = (h', f')` of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub h_prime: f64,
    pub f_prime: f64,
}

impl PhasePoint {
    pub const fn new(h_prime: f64, f_prime: f64) -> Self {
        Self { h_prime, f_prime }
    }

    pub const SADDLE: PhasePoint = PhasePoint::new(0.5, 0.0);

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        (self.h_prime - other.h_prime).hypot(self.f_prime - other.f_prime)
    }

    fn as_array(&self) -> [f64; 2] {
        [self.h_prime, self.f_prime]
    }
}

/// Derivatives `(H', F')` with respect to `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseVelocity {
    pub h_second: f64,
    pub f_second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2 {
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }
}

pub fn vector_field(p: PhasePoint, sign: SolitonSign) -> PhaseVelocity {
    let (h, f) = (p.h_prime, p.f_prime);
    let half_eps = 0.5 * sign.eps();
    PhaseVelocity {
        h_second: h * f - 2.0 * h * h + half_eps,
        f_second: 2.0 * h * f - 2.0 * h * h + half_eps,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CriticalSet {
    Points(Vec<PhasePoint>),
    /// Every point of the line `H = 0` is stationary.
    LineHZero,
    Empty,
}

pub fn critical_points(sign: SolitonSign) -> CriticalSet {
    match sign {
        SolitonSign::Expanding => {
            CriticalSet::Points(vec![PhasePoint::new(0.5, 0.0), PhasePoint::new(-0.5, 0.0)])
        }
        SolitonSign::Steady => CriticalSet::LineHZero,
        SolitonSign::Shrinking => CriticalSet::Empty,
    }
}

pub fn linearize(p: PhasePoint) -> Jacobian2 {
    let (h, f) = (p.h_prime, p.f_prime);
    Jacobian2 {
        a11: f - 4.0 * h,
        a12: h,
        a21: 2.0 * f - 4.0 * h,
        a22: 2.0 * h,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: [f64; 2],
}

/// Real eigenpairs of a 2×2 matrix, largest eigenvalue first.
///
/// Eigenvectors are scaled to have first component 1, or second component 1
/// when the first vanishes.
pub fn eigen_saddle(j: &Jacobian2) -> Result<[EigenPair; 2]> {
    let tr = j.trace();
    let det = j.det();
    let disc = tr * tr - 4.0 * det;
    let scale = tr * tr + det.abs();
    if disc < -1e-14 * scale {
        return Err(Error::EigenStructure("complex"));
    }
    if disc.abs() <= 1e-14 * scale {
        return Err(Error::EigenStructure("repeated"));
    }
    let root = disc.sqrt();
    // Avoid cancellation in the smaller-magnitude root.
    let big = -0.5 * (-tr - tr.signum() * root);
    let (l1, l2) = if big == 0.0 {
        (0.5 * root, -0.5 * root)
    } else {
        let other = det / big;
        (big.max(other), big.min(other))
    };
    Ok([
        EigenPair {
            value: l1,
            vector: eigenvector(j, l1),
        },
        EigenPair {
            value: l2,
            vector: eigenvector(j, l2),
        },
    ])
}

fn eigenvector(j: &Jacobian2, l: f64) -> [f64; 2] {
    let row1 = [j.a12, l - j.a11];
    let row2 = [l - j.a22, j.a21];
    let v = if row1[0].abs() + row1[1].abs() >= row2[0].abs() + row2[1].abs() {
        row1
    } else {
        row2
    };
    let tiny = 1e-14 * (v[0].abs() + v[1].abs());
    if v[0].abs() > tiny {
        [1.0, v[1] / v[0]]
    } else {
        [0.0, 1.0]
    }
}

/// Conditions that end an integration leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StopRule {
    HBelow(f64),
    HAbove(f64),
    FBelow(f64),
    FAbove(f64),
    AbsFAbove(f64),
    WithinDistance { center: PhasePoint, radius: f64 },
}

impl StopRule {
    pub fn fires(&self, p: &PhasePoint) -> bool {
        match *self {
            StopRule::HBelow(v) => p.h_prime < v,
            StopRule::HAbove(v) => p.h_prime > v,
            StopRule::FBelow(v) => p.f_prime < v,
            StopRule::FAbove(v) => p.f_prime > v,
            StopRule::AbsFAbove(v) => p.f_prime.abs() > v,
            StopRule::WithinDistance { center, radius } => p.distance(&center) < radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub forward_stops: Vec<StopRule>,
    pub backward_stops: Vec<StopRule>,
}

impl Default for IntegratorControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            r_min: -100.0,
            r_max: 100.0,
            forward_stops: Vec::new(),
            backward_stops: Vec::new(),
        }
    }
}

impl IntegratorControls {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_step: self.max_step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances().validate()?;
        if !(self.r_min < self.r_max) {
            return Err(Error::InvalidControls(format!(
                "r_min ({}) must be below r_max ({})",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }
}

/// Why one end of a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    RangeLimit,
    Stop(StopRule),
}

/// Closed-form continuation of an orbit beyond some `r`.
pub type TailFn = Arc<dyn Fn(f64) -> PhasePoint + Send + Sync>;

#[derive(Clone)]
struct Tail {
    r_start: f64,
    eval: TailFn,
}

impl fmt::Debug for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tail").field("r_start", &self.r_start).finish()
    }
}

/// Orbit samples ordered by increasing `r`, with the continuous extension of
/// every step between consecutive samples.
#[derive(Debug, Clone)]
pub struct Trajectory {
    r: Vec<f64>,
    points: Vec<PhasePoint>,
    segments: Vec<DenseSegment<2>>,
    tolerances: Tolerances,
    sign: SolitonSign,
    lower_end: Termination,
    upper_end: Termination,
    tail: Option<Tail>,
}

impl Trajectory {
    /// Replaces the orbit beyond `r_start` by `eval`, both at the stored
    /// samples and in interpolation. Quadratures keep using the steps.
    pub fn with_tail(mut self, r_start: f64, eval: TailFn) -> Self {
        for (r, p) in self.r.iter().zip(self.points.iter_mut()) {
            if *r > r_start {
                *p = eval(*r);
            }
        }
        self.tail = Some(Tail { r_start, eval });
        self
    }

    /// Start of the closed-form continuation, if any.
    pub fn tail_start(&self) -> Option<f64> {
        self.tail.as_ref().map(|t| t.r_start)
    }

    fn point_in_segment(&self, i: usize, r: f64) -> PhasePoint {
        match &self.tail {
            Some(t) if r > t.r_start => (t.eval)(r),
            _ => {
                let y = self.segments[i].eval(r);
                PhasePoint::new(y[0], y[1])
            }
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, PhasePoint)> + '_ {
        self.r.iter().copied().zip(self.points.iter().copied())
    }

    pub fn segments(&self) -> &[DenseSegment<2>] {
        &self.segments
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn sign(&self) -> SolitonSign {
        self.sign
    }

    pub fn lower_end(&self) -> Termination {
        self.lower_end
    }

    pub fn upper_end(&self) -> Termination {
        self.upper_end
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("trajectory has at least one sample")
    }

    pub fn first(&self) -> PhasePoint {
        self.points[0]
    }

    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectory has at least one sample")
    }

    /// Index of the segment containing `r`.
    pub fn segment_index(&self, r: f64) -> Result<usize> {
        if !(r >= self.r_min() && r <= self.r_max()) || self.segments.is_empty() {
            return Err(Error::OutOfRange {
                r,
                lo: self.r_min(),
                hi: self.r_max(),
            });
        }
        let i = self.r.partition_point(|&x| x <= r);
        Ok(i.saturating_sub(1).min(self.segments.len() - 1))
    }

    pub fn eval(&self, r: f64) -> Result<PhasePoint> {
        if self.segments.is_empty() && r == self.r_min() {
            return Ok(self.points[0]);
        }
        let i = self.segment_index(r)?;
        Ok(self.point_in_segment(i, r))
    }

    /// ∫ (H, F) dr over `[r_i, r]` inside segment `i`.
    pub fn integral_in_segment(&self, i: usize, r: f64) -> [f64; 2] {
        let seg = &self.segments[i];
        let lo = self.r[i];
        let from_start = seg.integral_from_start(r);
        if seg.t_start() == lo {
            from_start
        } else {
            // backward step: the segment starts at its upper end
            let whole = seg.integral_from_start(lo);
            [from_start[0] - whole[0], from_start[1] - whole[1]]
        }
    }

    /// Samples plus `per_segment` equally spaced interior points per step.
    pub fn dense_grid(&self, per_segment: usize) -> Vec<(f64, PhasePoint)> {
        self.dense_grid_upto(per_segment, self.r_max())
    }

    /// [`Trajectory::dense_grid`] restricted to the steps starting below `r_hi`.
    pub fn dense_grid_upto(&self, per_segment: usize, r_hi: f64) -> Vec<(f64, PhasePoint)> {
        let mut out = Vec::new();
        for i in 0..self.segments.len() {
            let (a, b) = (self.r[i], self.r[i + 1]);
            if a >= r_hi {
                return out;
            }
            out.push((a, self.points[i]));
            for k in 1..=per_segment {
                let r = a + (b - a) * k as f64 / (per_segment + 1) as f64;
                out.push((r, self.point_in_segment(i, r)));
            }
        }
        out.push((self.r_max(), self.last()));
        out
    }

    /// Dense grid with at least `min_points` entries.
    pub fn dense_grid_at_least(&self, min_points: usize) -> Vec<(f64, PhasePoint)> {
        let per = if self.segments.is_empty() {
            0
        } else {
            min_points
                .saturating_sub(self.len())
                .div_ceil(self.segments.len())
        };
        self.dense_grid(per)
    }

    /// Same orbit with `r` translated by `dr`.
    pub fn shifted(mut self, dr: f64) -> Self {
        for r in &mut self.r {
            *r += dr;
        }
        for seg in &mut self.segments {
            seg.shift(dr);
        }
        if let Some(t) = self.tail.take() {
            let inner = t.eval;
            self.tail = Some(Tail {
                r_start: t.r_start + dr,
                eval: Arc::new(move |r| inner(r - dr)),
            });
        }
        self
    }
}

pub(crate) fn phase_rhs(sign: SolitonSign) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |_, y| {
        let v = vector_field(PhasePoint::new(y[0], y[1]), sign);
        [v.h_second, v.f_second]
    }
}

fn first_fired(rules: &[StopRule], p: &PhasePoint) -> Option<StopRule> {
    rules.iter().copied().find(|rule| rule.fires(p))
}

/// Integrates the phase system from `start` at `r0` in both directions, as far
/// as the controls allow.
pub fn integrate(
    start: PhasePoint,
    r0: f64,
    controls: &IntegratorControls,
    sign: SolitonSign,
) -> Result<Trajectory> {
    controls.validate()?;
    if !(r0 >= controls.r_min && r0 <= controls.r_max) {
        return Err(Error::InvalidControls(format!(
            "start r0 = {r0} outside [{}, {}]",
            controls.r_min, controls.r_max
        )));
    }
    let tol = controls.tolerances();
    let y0 = start.as_array();
    let leg = |t_end: f64, rules: &[StopRule]| {
        dop853(phase_rhs(sign), r0, y0, t_end, &tol, |_, y| {
            first_fired(rules, &PhasePoint::new(y[0], y[1])).is_some()
        })
    };
    let fwd = leg(controls.r_max, &controls.forward_stops)?;
    let bwd = leg(controls.r_min, &controls.backward_stops)?;

    let end_of = |sol: &crate::ode::Solution<2>, rules: &[StopRule]| match sol.end {
        LegEnd::Bound => Termination::RangeLimit,
        LegEnd::Stopped => {
            let y = sol.states.last().expect("non-empty leg");
            Termination::Stop(first_fired(rules, &PhasePoint::new(y[0], y[1])).expect("stop rule fired"))
        }
    };
    let upper_end = end_of(&fwd, &controls.forward_stops);
    let lower_end = end_of(&bwd, &controls.backward_stops);

    let n = fwd.times.len() + bwd.times.len() - 1;
    let mut r = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut segments = Vec::with_capacity(n.saturating_sub(1));
    for (t, y) in bwd.times.iter().zip(&bwd.states).rev() {
        r.push(*t);
        points.push(PhasePoint::new(y[0], y[1]));
    }
    segments.extend(bwd.segments.into_iter().rev());
    for (t, y) in fwd.times.iter().zip(&fwd.states).skip(1) {
        r.push(*t);
        points.push(PhasePoint::new(y[0], y[1]));
    }
    segments.extend(fwd.segments);

    Ok(Trajectory {
        r,
        points,
        segments,
        tolerances: tol,
        sign,
        lower_end,
        upper_end,
        tail: None,
    })
}

//! Exact analysis of the phase field at infinity: projective chart, iterated
//! blow-ups of the field and of the curve `{C_t = 0}`, and contact orders
//! between that curve and the separatrix germ.

pub mod poly;
pub mod roots;
pub mod series;
pub mod text;

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use poly::{rat, rat_to_f64, CoeffAffineT, ExactPoly, Rational};
use roots::{real_roots, RealRoot, UniPoly};

/// `H' = HF − 2H² + 1/2`, `F' = 2HF − 2H² + 1/2` in variables `(x, y) = (H, F)`.
pub fn soliton_field() -> (ExactPoly, ExactPoly) {
    let p = ExactPoly::from_terms(&[
        (1, 1, (1, 1), (0, 1)),
        (2, 0, (-2, 1), (0, 1)),
        (0, 0, (1, 2), (0, 1)),
    ]);
    let q = ExactPoly::from_terms(&[
        (1, 1, (2, 1), (0, 1)),
        (2, 0, (-2, 1), (0, 1)),
        (0, 0, (1, 2), (0, 1)),
    ]);
    (p, q)
}

/// `C_t = (2xy − x² + 1) + s·y²(−2xy + 2x² − 1)`.
pub fn ct_polynomial() -> ExactPoly {
    ExactPoly::from_terms(&[
        (1, 1, (2, 1), (0, 1)),
        (2, 0, (-1, 1), (0, 1)),
        (0, 0, (1, 1), (0, 1)),
        (1, 3, (0, 1), (-2, 1)),
        (2, 2, (0, 1), (2, 1)),
        (0, 2, (0, 1), (-1, 1)),
    ])
}

/// `2HF − 4H² + 1`, i.e. twice `H'`: the vertical isocline with `H` cleared.
pub fn vertical_isocline_polynomial() -> ExactPoly {
    ExactPoly::from_terms(&[
        (1, 1, (2, 1), (0, 1)),
        (2, 0, (-4, 1), (0, 1)),
        (0, 0, (1, 1), (0, 1)),
    ])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Chart `x̃ = −x/y, ỹ = −1/y`; `field_degree` is the power of `ỹ` used to
    /// clear denominators, `field_cancel` the common `ỹ` power removed after.
    Chart {
        field_degree: u32,
        curve_degree: u32,
        field_cancel: u32,
    },
    FixS(Rational),
    Blowup {
        field_cancel: u32,
        curve_mult: u32,
    },
    Translate(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlowupState {
    pub p: ExactPoly,
    pub q: ExactPoly,
    pub curve: ExactPoly,
    source_curve: ExactPoly,
    log: Vec<Step>,
}

fn cancel_common_y(p: &ExactPoly, q: &ExactPoly) -> (ExactPoly, ExactPoly, u32) {
    let k = match (p.is_zero(), q.is_zero()) {
        (true, true) => 0,
        (true, false) => q.y_valuation(),
        (false, true) => p.y_valuation(),
        (false, false) => p.y_valuation().min(q.y_valuation()),
    };
    (p.div_y_pow(k), q.div_y_pow(k), k)
}

/// Soliton field and `C_t` moved to the chart at infinity.
pub fn chart_to_infinity() -> BlowupState {
    chart_to_infinity_with(ct_polynomial())
}

/// Chart at infinity for the soliton field with an arbitrary curve.
pub fn chart_to_infinity_with(curve: ExactPoly) -> BlowupState {
    let (p, q) = soliton_field();
    let n = p.total_degree().max(q.total_degree());
    let pt = p.at_infinity(n);
    let qt = q.at_infinity(n);
    let p_new = &pt + &(&ExactPoly::x() * &qt);
    let q_new = &ExactPoly::y() * &qt;
    let (p_new, q_new, k) = cancel_common_y(&p_new, &q_new);
    let d = curve.total_degree();
    BlowupState {
        p: p_new,
        q: q_new,
        curve: curve.at_infinity(d),
        source_curve: curve,
        log: vec![Step::Chart {
            field_degree: n,
            curve_degree: d,
            field_cancel: k,
        }],
    }
}

impl BlowupState {
    pub fn log(&self) -> &[Step] {
        &self.log
    }

    pub fn source_curve(&self) -> &ExactPoly {
        &self.source_curve
    }

    pub fn blowup_count(&self) -> usize {
        self.log
            .iter()
            .filter(|s| matches!(s, Step::Blowup { .. }))
            .count()
    }

    /// Extracted curve multiplicities, one per blow-up.
    pub fn curve_multiplicities(&self) -> Vec<u32> {
        self.log
            .iter()
            .filter_map(|s| match s {
                Step::Blowup { curve_mult, .. } => Some(*curve_mult),
                _ => None,
            })
            .collect()
    }

    pub fn fix_s(&self, s: &Rational) -> Self {
        let mut st = self.clone();
        st.curve = st.curve.at_s(s);
        st.log.push(Step::FixS(s.clone()));
        st
    }

    /// Rebuilds the state by re-applying the log to the chart state.
    pub fn replay(&self) -> Self {
        let mut st = chart_to_infinity_with(self.source_curve.clone());
        for step in self.log.iter().skip(1) {
            st = match step {
                Step::Chart { .. } => unreachable!("chart only at the start"),
                Step::FixS(s) => st.fix_s(s),
                Step::Blowup { .. } => blowup_once(&st),
                Step::Translate(a) => translate(&st, a),
            };
        }
        st
    }

    /// Exact image of a phase-plane point `(H, F)` (with `F < 0`) under the
    /// accumulated chart, blow-up and translation maps.
    pub fn map_phase_point(&self, h: &Rational, f: &Rational) -> Option<(Rational, Rational)> {
        if !f.is_negative() {
            return None;
        }
        let mut x = -(h / f);
        let y = -(Rational::one() / f);
        for step in self.log.iter().skip(1) {
            match step {
                Step::Blowup { .. } => x = &x / &y,
                Step::Translate(a) => x = &x - a,
                Step::Chart { .. } | Step::FixS(_) => {}
            }
        }
        Some((x, y))
    }
}

/// One blow-up `x = x̃ỹ, y = ỹ`, in the chart that keeps the `x`-axis direction.
pub fn blowup_once(st: &BlowupState) -> BlowupState {
    let ps = st.p.subs_x_times_y();
    let qs = st.q.subs_x_times_y();
    let p_new = &ps - &(&ExactPoly::x() * &qs);
    let q_new = &ExactPoly::y() * &qs;
    let (p_new, q_new, k) = cancel_common_y(&p_new, &q_new);
    let c = st.curve.subs_x_times_y();
    let m = if c.is_zero() { 0 } else { c.y_valuation() };
    let mut log = st.log.clone();
    log.push(Step::Blowup {
        field_cancel: k,
        curve_mult: m,
    });
    BlowupState {
        p: p_new,
        q: q_new,
        curve: c.div_y_pow(m),
        source_curve: st.source_curve.clone(),
        log,
    }
}

/// Substitutes `x → x + a`, moving the point `(a, 0)` to the origin.
pub fn translate(st: &BlowupState, a: &Rational) -> BlowupState {
    let mut log = st.log.clone();
    log.push(Step::Translate(a.clone()));
    BlowupState {
        p: st.p.translate_x(a),
        q: st.q.translate_x(a),
        curve: st.curve.translate_x(a),
        source_curve: st.source_curve.clone(),
        log,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DivisorCriticalSet {
    /// The whole divisor is stationary.
    Whole,
    Points(Vec<RealRoot>),
}

fn rational_part(c: &[CoeffAffineT]) -> UniPoly {
    UniPoly::new(
        c.iter()
            .map(|k| {
                assert!(k.is_constant(), "field must not depend on s");
                k.c0.clone()
            })
            .collect(),
    )
}

/// Common real roots of `P(x, 0)` and `Q(x, 0)`.
pub fn divisor_critical_points(st: &BlowupState) -> DivisorCriticalSet {
    let p0 = rational_part(&st.p.restrict_y0());
    let q0 = rational_part(&st.q.restrict_y0());
    let g = match (p0.is_zero(), q0.is_zero()) {
        (true, true) => return DivisorCriticalSet::Whole,
        (true, false) => q0,
        (false, true) => p0,
        (false, false) => p0.gcd(&q0),
    };
    DivisorCriticalSet::Points(real_roots(&g))
}

/// Polynomial in `s` from an affine coefficient.
fn affine_uni(c: &CoeffAffineT) -> UniPoly {
    UniPoly::new(vec![c.c0.clone(), c.c1.clone()])
}

/// Where the strict transform of the curve meets `{y = 0}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DivisorIntersection {
    /// Nonzero constant: no intersection.
    Empty,
    /// The curve contains the divisor.
    Whole,
    /// `x = num(s)/den(s)`.
    Linear { num: UniPoly, den: UniPoly },
    /// Higher degree in `x`; coefficients by increasing power.
    Polynomial(Vec<CoeffAffineT>),
}

impl DivisorIntersection {
    /// Exact comparison with `num/den`, both polynomials in `s`.
    pub fn equals_ratio(&self, num: &UniPoly, den: &UniPoly) -> bool {
        match self {
            DivisorIntersection::Linear { num: a, den: b } => a.mul(den) == num.mul(b),
            _ => false,
        }
    }

    pub fn eval(&self, s: &Rational) -> Option<Rational> {
        match self {
            DivisorIntersection::Linear { num, den } => {
                let d = den.eval(s);
                (!d.is_zero()).then(|| num.eval(s) / d)
            }
            _ => None,
        }
    }
}

pub fn curve_divisor_intersection(st: &BlowupState) -> DivisorIntersection {
    let c = st.curve.restrict_y0();
    match c.len() {
        1 if c[0].is_zero() => DivisorIntersection::Whole,
        1 => DivisorIntersection::Empty,
        2 => DivisorIntersection::Linear {
            num: affine_uni(&-&c[0]),
            den: affine_uni(&c[1]),
        },
        _ => DivisorIntersection::Polynomial(c),
    }
}

impl fmt::Display for DivisorIntersection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivisorIntersection::Empty => write!(f, "empty"),
            DivisorIntersection::Whole => write!(f, "whole divisor"),
            DivisorIntersection::Linear { num, den } => {
                write!(f, "{}", text::rational_function(num, den))
            }
            DivisorIntersection::Polynomial(c) => {
                let parts: Vec<String> = c.iter().enumerate().map(|(i, k)| format!("{k}*x^{i}")).collect();
                write!(f, "roots of {}", parts.join(" + "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceMode {
    /// `s` kept symbolic.
    Generic,
    /// `s` fixed to `num/den`.
    Fixed(i64, i64),
}

/// A tracked point near the asymptote, mapped exactly alongside the state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shadow {
    pub h: Rational,
    pub f: Rational,
}

impl Shadow {
    /// Exact rational copy of a floating-point phase point.
    pub fn from_f64(h: f64, f: f64) -> Result<Self> {
        let conv = |v: f64| {
            Rational::from_float(v).ok_or_else(|| Error::Blowup(format!("non-finite shadow value {v}")))
        };
        Ok(Self {
            h: conv(h)?,
            f: conv(f)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlowupReport {
    pub mode: SequenceMode,
    pub blowups: usize,
    /// `(blow-ups so far, amount)` for every translation applied.
    pub translations: Vec<(usize, Rational)>,
    /// Abscissa of the tracked divisor critical point before recentering.
    pub final_critical_point: Rational,
    pub abscissa: DivisorIntersection,
    pub contact_order: usize,
    pub state: BlowupState,
}

const MAX_BLOWUPS: usize = 32;

/// Blows up the tracked point until the curve's strict transform no longer
/// passes through it.
pub fn run_sequence(mode: SequenceMode, shadow: &Shadow) -> Result<BlowupReport> {
    run_sequence_with(ct_polynomial(), mode, shadow)
}

pub fn run_sequence_with(curve: ExactPoly, mode: SequenceMode, shadow: &Shadow) -> Result<BlowupReport> {
    let mut st = chart_to_infinity_with(curve);
    if let SequenceMode::Fixed(n, d) = mode {
        st = st.fix_s(&rat(n, d));
    }
    let mut translations = Vec::new();
    loop {
        let (sx, _) = st
            .map_phase_point(&shadow.h, &shadow.f)
            .ok_or_else(|| Error::Blowup("shadow point must have F < 0".into()))?;
        let DivisorCriticalSet::Points(points) = divisor_critical_points(&st) else {
            return Err(Error::Blowup(format!(
                "divisor is entirely critical after {} blow-ups",
                st.blowup_count()
            )));
        };
        let sxf = rat_to_f64(&sx);
        let tracked = points
            .iter()
            .min_by(|a, b| (a.approx() - sxf).abs().total_cmp(&(b.approx() - sxf).abs()))
            .ok_or_else(|| {
                Error::Blowup(format!(
                    "no critical point on the divisor after {} blow-ups",
                    st.blowup_count()
                ))
            })?;
        let a = match tracked {
            RealRoot::Rational(a) => a.clone(),
            RealRoot::Irrational { lo, hi } => {
                return Err(Error::Blowup(format!(
                    "tracked critical point is irrational, isolated in [{lo}, {hi}]"
                )))
            }
        };
        if !a.is_zero() {
            st = translate(&st, &a);
            translations.push((st.blowup_count(), a.clone()));
        }
        if !st.curve.coeff(0, 0).is_zero() {
            let blowups = st.blowup_count();
            return Ok(BlowupReport {
                mode,
                blowups,
                translations,
                final_critical_point: a,
                abscissa: curve_divisor_intersection(&st),
                contact_order: blowups.saturating_sub(1),
                state: st,
            });
        }
        if st.blowup_count() >= MAX_BLOWUPS {
            return Err(Error::Blowup(format!(
                "curve still passes through the tracked point after {MAX_BLOWUPS} blow-ups"
            )));
        }
        st = blowup_once(&st);
    }
}

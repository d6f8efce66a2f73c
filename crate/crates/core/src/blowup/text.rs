//! Canonical text form: monomials in increasing `(deg_x, deg_y)` order,
//! rationals as `p/q`, one record per line.

use std::fmt::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::poly::{CoeffAffineT, ExactPoly, Rational};
use super::roots::UniPoly;
use super::{BlowupReport, BlowupState, SequenceMode, Step};

fn monomial(i: u32, j: u32) -> String {
    let mut parts = Vec::new();
    match i {
        0 => {}
        1 => parts.push("x".to_string()),
        _ => parts.push(format!("x^{i}")),
    }
    match j {
        0 => {}
        1 => parts.push("y".to_string()),
        _ => parts.push(format!("y^{j}")),
    }
    parts.join("*")
}

fn coeff(c: &CoeffAffineT) -> String {
    format!("{c}")
}

pub fn poly(p: &ExactPoly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    p.terms()
        .map(|(&(i, j), c)| {
            let m = monomial(i, j);
            if m.is_empty() {
                coeff(c)
            } else {
                format!("{}*{m}", coeff(c))
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn step(s: &Step) -> String {
    match s {
        Step::Chart {
            field_degree,
            curve_degree,
            field_cancel,
        } => {
            format!("chart(field_degree={field_degree}, curve_degree={curve_degree}, cancel={field_cancel})")
        }
        Step::FixS(s) => format!("fix_s({s})"),
        Step::Blowup {
            field_cancel,
            curve_mult,
        } => format!("blowup(cancel={field_cancel}, curve_mult={curve_mult})"),
        Step::Translate(a) => format!("translate({a})"),
    }
}

pub fn state(st: &BlowupState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "source_curve: {}", poly(st.source_curve()));
    let _ = writeln!(out, "P: {}", poly(&st.p));
    let _ = writeln!(out, "Q: {}", poly(&st.q));
    let _ = writeln!(out, "curve: {}", poly(&st.curve));
    for s in st.log() {
        let _ = writeln!(out, "step: {}", step(s));
    }
    out
}

pub fn mode(m: SequenceMode) -> String {
    match m {
        SequenceMode::Generic => "generic".into(),
        SequenceMode::Fixed(n, d) => format!("s={}", Rational::new(n.into(), d.into())),
    }
}

pub fn report(r: &BlowupReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode: {}", mode(r.mode));
    let _ = writeln!(out, "blowups: {}", r.blowups);
    let _ = writeln!(out, "contact_order: {}", r.contact_order);
    for (k, a) in &r.translations {
        let _ = writeln!(out, "translation: after={k} amount={a}");
    }
    let _ = writeln!(out, "final_critical_point: {}", r.final_critical_point);
    let _ = writeln!(out, "curve_divisor_abscissa: {}", r.abscissa);
    let mults: Vec<String> = r
        .state
        .curve_multiplicities()
        .iter()
        .map(u32::to_string)
        .collect();
    let _ = writeln!(out, "curve_multiplicities: {}", mults.join(","));
    out.push_str(&state(&r.state));
    out
}

fn content(p: &UniPoly) -> Rational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for c in &p.0 {
        num = num.gcd(c.numer());
        den = den.lcm(c.denom());
    }
    let k = Rational::new(num, den);
    match p.0.last() {
        Some(l) if l.is_negative() => -k,
        _ => k,
    }
}

fn integer_poly(p: &UniPoly) -> String {
    let mut parts = Vec::new();
    for (i, c) in p.0.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let var = match i {
            0 => String::new(),
            1 => "s".into(),
            _ => format!("s^{i}"),
        };
        let body = match (mag.is_one(), var.is_empty()) {
            (true, false) => var,
            (_, true) => format!("{mag}"),
            (false, false) => format!("{mag}*{var}"),
        };
        let sign = if c.is_negative() { "-" } else { "+" };
        if parts.is_empty() {
            parts.push(if c.is_negative() { format!("-{body}") } else { body });
        } else {
            parts.push(format!("{sign} {body}"));
        }
    }
    parts.join(" ")
}

fn is_single_term(p: &UniPoly) -> bool {
    p.0.iter().filter(|c| !c.is_zero()).count() == 1
}

/// Renders `num/den` (polynomials in `s`) with integer primitive parts, e.g.
/// `(s - 1)/(8*s)`.
pub fn rational_function(num: &UniPoly, den: &UniPoly) -> String {
    if num.is_zero() {
        return "0".into();
    }
    let kn = content(num);
    let kd = content(den);
    let np = UniPoly::new(num.0.iter().map(|c| c / &kn).collect());
    let dp = UniPoly::new(den.0.iter().map(|c| c / &kd).collect());
    let k = kn / kd;
    let (p, q) = (k.numer().clone(), k.denom().clone());
    let num_str = {
        let body = integer_poly(&np);
        let body = if is_single_term(&np) {
            body
        } else {
            format!("({body})")
        };
        if body == "1" {
            format!("{p}")
        } else if p.is_one() {
            body
        } else if (-&p).is_one() {
            format!("-{body}")
        } else {
            format!("{p}*{body}")
        }
    };
    let den_body = integer_poly(&dp);
    let den_str = match (q.is_one(), den_body.as_str()) {
        (true, "1") => return num_str,
        (false, "1") => format!("{q}"),
        (true, _) => {
            if is_single_term(&dp) {
                den_body
            } else {
                format!("({den_body})")
            }
        }
        (false, _) => {
            if is_single_term(&dp) {
                format!("({q}*{den_body})")
            } else {
                format!("({q}*({den_body}))")
            }
        }
    };
    format!("{num_str}/{den_str}")
}

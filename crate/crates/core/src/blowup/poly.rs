//! Bivariate polynomials with exact coefficients of the form `c0 + c1·s`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// `(deg_x, deg_y, (num, den) of c0, (num, den) of c1)`.
pub type TermSpec = (u32, u32, (i64, i64), (i64, i64));

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact coefficient `c0 + c1·s`, where `s = t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CoeffAffineT {
    pub c0: Rational,
    pub c1: Rational,
}

impl CoeffAffineT {
    pub fn new(c0: Rational, c1: Rational) -> Self {
        Self { c0, c1 }
    }

    pub fn constant(c0: Rational) -> Self {
        Self {
            c0,
            c1: Rational::zero(),
        }
    }

    pub fn s() -> Self {
        Self::new(Rational::zero(), Rational::one())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.c1.is_zero()
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Self::new(&self.c0 * k, &self.c1 * k)
    }

    pub fn eval(&self, s: &Rational) -> Rational {
        &self.c0 + &self.c1 * s
    }

    pub fn eval_f64(&self, s: f64) -> f64 {
        rat_to_f64(&self.c0) + rat_to_f64(&self.c1) * s
    }

    /// Product, or `None` if it would need an `s²` term.
    pub fn checked_mul(&self, o: &Self) -> Option<Self> {
        if !self.c1.is_zero() && !o.c1.is_zero() {
            return None;
        }
        Some(Self::new(&self.c0 * &o.c0, &self.c0 * &o.c1 + &self.c1 * &o.c0))
    }
}

impl Add for &CoeffAffineT {
    type Output = CoeffAffineT;
    fn add(self, o: &CoeffAffineT) -> CoeffAffineT {
        CoeffAffineT::new(&self.c0 + &o.c0, &self.c1 + &o.c1)
    }
}

impl Sub for &CoeffAffineT {
    type Output = CoeffAffineT;
    fn sub(self, o: &CoeffAffineT) -> CoeffAffineT {
        CoeffAffineT::new(&self.c0 - &o.c0, &self.c1 - &o.c1)
    }
}

impl Neg for &CoeffAffineT {
    type Output = CoeffAffineT;
    fn neg(self) -> CoeffAffineT {
        CoeffAffineT::new(-&self.c0, -&self.c1)
    }
}

impl Mul for &CoeffAffineT {
    type Output = CoeffAffineT;
    fn mul(self, o: &CoeffAffineT) -> CoeffAffineT {
        self.checked_mul(o)
            .expect("coefficient ring is affine in s; product would be quadratic")
    }
}

impl fmt::Display for CoeffAffineT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.c0.is_zero(), self.c1.is_zero()) {
            (_, true) => write!(f, "{}", self.c0),
            (true, false) => write!(f, "{}*s", self.c1),
            (false, false) => write!(f, "({} + {}*s)", self.c0, self.c1),
        }
    }
}

/// Sparse polynomial in `(x, y)`; keys are `(deg_x, deg_y)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ExactPoly {
    terms: BTreeMap<(u32, u32), CoeffAffineT>,
}

impl ExactPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: CoeffAffineT) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(i: u32, j: u32, c: CoeffAffineT) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, c);
        p
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, CoeffAffineT::one())
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, CoeffAffineT::one())
    }

    /// Builds from `(deg_x, deg_y, c0, c1)` with `c0`, `c1` given as `(num, den)`.
    pub fn from_terms(terms: &[TermSpec]) -> Self {
        let mut p = Self::zero();
        for &(i, j, a, b) in terms {
            p.add_term(i, j, CoeffAffineT::new(rat(a.0, a.1), rat(b.0, b.1)));
        }
        p
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: CoeffAffineT) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((i, j)).or_default();
        *entry = &*entry + &c;
        if entry.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &CoeffAffineT)> {
        self.terms.iter()
    }

    pub fn coeff(&self, i: u32, j: u32) -> CoeffAffineT {
        self.terms.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn degree_x(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn is_s_free(&self) -> bool {
        self.terms.values().all(CoeffAffineT::is_constant)
    }

    /// Largest `k` with `y^k` dividing the polynomial (0 for the zero polynomial).
    pub fn y_valuation(&self) -> u32 {
        self.terms.keys().map(|k| k.1).min().unwrap_or(0)
    }

    pub fn div_y_pow(&self, k: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&(i, j), c)| {
                assert!(j >= k, "y^{k} does not divide the polynomial");
                ((i, j - k), c.clone())
            })
            .collect();
        Self { terms }
    }

    pub fn mul_y_pow(&self, k: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(&(i, j), c)| ((i, j + k), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &CoeffAffineT) -> Self {
        let mut p = Self::zero();
        for (&(i, j), c) in &self.terms {
            p.add_term(i, j, c * k);
        }
        p
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(CoeffAffineT::one());
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// `p(x·y, y)`.
    pub fn subs_x_times_y(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(&(i, j), c)| ((i, i + j), c.clone()))
                .collect(),
        }
    }

    /// `p(x + a, y)`.
    pub fn translate_x(&self, a: &Rational) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            // (x + a)^i = Σ binom(i, k) a^(i-k) x^k
            let mut binom = BigInt::one();
            for k in (0..=i).rev() {
                let exp = (i - k) as i32;
                let factor = Rational::from_integer(binom.clone()) * pow_rat(a, exp);
                out.add_term(k, j, c.scale(&factor));
                binom = binom * BigInt::from(k) / BigInt::from(i - k + 1);
            }
        }
        out
    }

    /// `y^n · p(x/y, −1/y)`; requires `n ≥ total_degree`.
    pub fn at_infinity(&self, n: u32) -> Self {
        assert!(n >= self.total_degree(), "chart degree below polynomial degree");
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            let c = if j % 2 == 1 { -c } else { c.clone() };
            out.add_term(i, n - i - j, c);
        }
        out
    }

    /// Fixes `s` to a rational value.
    pub fn at_s(&self, s: &Rational) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            out.add_term(i, j, CoeffAffineT::constant(c.eval(s)));
        }
        out
    }

    /// Coefficients of `p(x, 0)` by increasing power of `x`.
    pub fn restrict_y0(&self) -> Vec<CoeffAffineT> {
        let mut v = vec![CoeffAffineT::zero(); self.degree_x() as usize + 1];
        for (&(i, j), c) in &self.terms {
            if j == 0 {
                v[i as usize] = c.clone();
            }
        }
        while v.len() > 1 && v.last().is_some_and(CoeffAffineT::is_zero) {
            v.pop();
        }
        v
    }

    pub fn eval(&self, x: &Rational, y: &Rational, s: &Rational) -> Rational {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c.eval(s) * pow_rat(x, i as i32) * pow_rat(y, j as i32))
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn eval_f64(&self, x: f64, y: f64, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c.eval_f64(s) * x.powi(i as i32) * y.powi(j as i32))
            .sum()
    }

    /// Largest absolute numerator or denominator among the coefficients.
    pub fn max_height(&self) -> BigInt {
        self.terms
            .values()
            .flat_map(|c| [&c.c0, &c.c1])
            .flat_map(|q| [q.numer().abs(), q.denom().abs()])
            .max()
            .unwrap_or_else(BigInt::zero)
    }
}

pub fn pow_rat(q: &Rational, n: i32) -> Rational {
    if n == 0 {
        return Rational::one();
    }
    num_traits::pow(q.clone(), n as usize)
}

impl Add for &ExactPoly {
    type Output = ExactPoly;
    fn add(self, o: &ExactPoly) -> ExactPoly {
        let mut p = self.clone();
        for (&(i, j), c) in &o.terms {
            p.add_term(i, j, c.clone());
        }
        p
    }
}

impl Sub for &ExactPoly {
    type Output = ExactPoly;
    fn sub(self, o: &ExactPoly) -> ExactPoly {
        let mut p = self.clone();
        for (&(i, j), c) in &o.terms {
            p.add_term(i, j, -c);
        }
        p
    }
}

impl Neg for &ExactPoly {
    type Output = ExactPoly;
    fn neg(self) -> ExactPoly {
        ExactPoly {
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

impl Mul for &ExactPoly {
    type Output = ExactPoly;
    fn mul(self, o: &ExactPoly) -> ExactPoly {
        let mut p = ExactPoly::zero();
        for (&(i, j), a) in &self.terms {
            for (&(k, l), b) in &o.terms {
                p.add_term(i + k, j + l, a * b);
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: i64) -> CoeffAffineT {
        CoeffAffineT::constant(rat(n, 1))
    }

    #[test]
    fn affine_ring_guard() {
        let s = CoeffAffineT::s();
        assert!(s.checked_mul(&s).is_none());
        let two_s = s.checked_mul(&c(2)).unwrap();
        assert_eq!(two_s.eval(&rat(3, 1)), rat(6, 1));
        assert_eq!(
            format!("{}", CoeffAffineT::new(rat(1, 2), rat(-3, 4))),
            "(1/2 + -3/4*s)"
        );
    }

    #[test]
    fn zero_terms_are_dropped() {
        let p = &ExactPoly::x() - &ExactPoly::x();
        assert!(p.is_zero());
        assert_eq!(p.y_valuation(), 0);
    }

    #[test]
    fn translate_round_trip() {
        let p = ExactPoly::from_terms(&[
            (3, 1, (2, 1), (0, 1)),
            (1, 0, (-1, 3), (5, 7)),
            (0, 2, (1, 1), (1, 1)),
        ]);
        let a = rat(-3, 16);
        assert_eq!(p.translate_x(&a).translate_x(&-a.clone()), p);
        assert_eq!(p.translate_x(&rat(0, 1)), p);
        let q = p.translate_x(&rat(1, 2));
        let (x, y, s) = (rat(2, 3), rat(-5, 4), rat(7, 2));
        assert_eq!(q.eval(&x, &y, &s), p.eval(&(&x + rat(1, 2)), &y, &s));
    }

    #[test]
    fn node_blows_up_to_normal_crossing() {
        let p = &ExactPoly::x().pow(2) + &ExactPoly::y().pow(2);
        let b = p.subs_x_times_y();
        assert_eq!(b.y_valuation(), 2);
        let strict = b.div_y_pow(2);
        assert_eq!(strict, &ExactPoly::x().pow(2) + &ExactPoly::constant(c(1)));
        assert!(ExactPoly::zero().subs_x_times_y().is_zero());
    }

    #[test]
    fn chart_of_monomials() {
        // x^2 y -> y^3 (x/y)^2 (-1/y) = -x^2
        let p = ExactPoly::monomial(2, 1, c(1));
        assert_eq!(p.at_infinity(3), ExactPoly::monomial(2, 0, c(-1)));
    }
}

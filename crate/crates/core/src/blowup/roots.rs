//! Exact real roots of univariate rational polynomials.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::{rat, Rational};

/// Dense univariate polynomial, coefficients by increasing degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly(pub Vec<Rational>);

impl UniPoly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        Self(c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn lead(&self) -> &Rational {
        self.0.last().expect("non-zero polynomial")
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead().clone();
        Self(self.0.iter().map(|c| c / &l).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::new(Vec::new());
        }
        let mut c = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let dd = d.degree().unwrap_or(0);
        let mut r = self.0.clone();
        if r.len() <= dd {
            return (Self::new(Vec::new()), self.clone());
        }
        let mut q = vec![Rational::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = &r[k + dd] / d.lead();
            for (i, dc) in d.0.iter().enumerate() {
                r[k + i] = &r[k + i] - &f * dc;
            }
            q[k] = f;
        }
        r.truncate(dd);
        (Self::new(q), Self::new(r))
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn square_free(&self) -> Self {
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) || g.is_zero() {
            return self.monic();
        }
        self.div_rem(&g).0.monic()
    }

    fn sign_at(&self, x: &Rational) -> i32 {
        let v = self.eval(x);
        if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        }
    }
}

/// A real root, exact when rational, otherwise an isolating interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealRoot {
    Rational(Rational),
    Irrational { lo: Rational, hi: Rational },
}

impl RealRoot {
    pub fn approx(&self) -> f64 {
        match self {
            RealRoot::Rational(q) => super::poly::rat_to_f64(q),
            RealRoot::Irrational { lo, hi } => {
                0.5 * (super::poly::rat_to_f64(lo) + super::poly::rat_to_f64(hi))
            }
        }
    }
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            out.push(d.clone());
            let other = &n / &d;
            if other != d {
                out.push(other);
            }
        }
        d += 1;
    }
    out
}

fn integer_coefficients(p: &UniPoly) -> Vec<BigInt> {
    let lcm = p.0.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    p.0.iter()
        .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer())
        .collect()
}

/// Rational roots by the rational-root test (square-free input assumed).
fn rational_roots(p: &UniPoly) -> Vec<Rational> {
    let mut roots = Vec::new();
    let mut ints = integer_coefficients(p);
    if ints.first().is_some_and(Zero::is_zero) {
        roots.push(Rational::zero());
        let k = ints.iter().take_while(|c| c.is_zero()).count();
        ints.drain(..k);
    }
    if ints.len() < 2 {
        return roots;
    }
    let a0 = ints[0].clone();
    let an = ints.last().cloned().expect("non-empty");
    for pn in divisors(&a0) {
        for qd in divisors(&an) {
            for sign in [1, -1] {
                let cand = BigRational::new(&pn * sign, qd.clone());
                if p.eval(&cand).is_zero() && !roots.contains(&cand) {
                    roots.push(cand);
                }
            }
        }
    }
    roots
}

fn sturm_chain(p: &UniPoly) -> Vec<UniPoly> {
    let mut chain = vec![p.clone(), p.derivative()];
    while let Some(last) = chain.last().filter(|l| !l.is_zero()) {
        let prev = &chain[chain.len() - 2];
        let (_, r) = prev.div_rem(last);
        if r.is_zero() {
            break;
        }
        chain.push(UniPoly::new(r.0.iter().map(|c| -c).collect()));
    }
    chain
}

fn sign_changes(chain: &[UniPoly], x: &Rational) -> usize {
    let signs: Vec<i32> = chain.iter().map(|p| p.sign_at(x)).filter(|&s| s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn cauchy_bound(p: &UniPoly) -> Rational {
    let lead = p.lead().abs();
    let m = p.0[..p.0.len() - 1]
        .iter()
        .map(|c| c.abs() / &lead)
        .fold(Rational::zero(), |a, b| if b > a { b } else { a });
    m + Rational::one()
}

/// All distinct real roots in increasing order.
pub fn real_roots(p: &UniPoly) -> Vec<RealRoot> {
    if p.is_zero() || p.degree() == Some(0) {
        return Vec::new();
    }
    let mut sf = p.square_free();
    let rational = rational_roots(&sf);
    for r in &rational {
        let lin = UniPoly::new(vec![-r.clone(), Rational::one()]);
        sf = sf.div_rem(&lin).0;
    }
    let mut out: Vec<RealRoot> = rational.into_iter().map(RealRoot::Rational).collect();
    if sf.degree().unwrap_or(0) >= 1 {
        let chain = sturm_chain(&sf);
        let b = cauchy_bound(&sf);
        isolate(&chain, -b.clone(), b, &mut out);
    }
    out.sort_by(|a, b| a.approx().total_cmp(&b.approx()));
    out
}

fn isolate(chain: &[UniPoly], lo: Rational, hi: Rational, out: &mut Vec<RealRoot>) {
    let n = sign_changes(chain, &lo) - sign_changes(chain, &hi);
    match n {
        0 => {}
        1 => {
            // shrink until the interval is short enough to be useful
            let (mut lo, mut hi) = (lo, hi);
            let p = &chain[0];
            let width = rat(1, 1 << 20);
            while &hi - &lo > width {
                let mid = (&lo + &hi) / rat(2, 1);
                if p.sign_at(&lo) * p.sign_at(&mid) <= 0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(RealRoot::Irrational { lo, hi });
        }
        _ => {
            let mid = (&lo + &hi) / rat(2, 1);
            isolate(chain, lo, mid.clone(), out);
            isolate(chain, mid, hi, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(c: &[(i64, i64)]) -> UniPoly {
        UniPoly::new(c.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    #[test]
    fn roots_of_the_chart_axis_polynomial() {
        // -x(2x^2 + 4x + 1)
        let p = up(&[(0, 1), (-1, 1), (-4, 1), (-2, 1)]);
        let roots = real_roots(&p);
        assert_eq!(roots.len(), 3);
        assert!(roots.contains(&RealRoot::Rational(rat(0, 1))));
        let irr: Vec<f64> = roots
            .iter()
            .filter(|r| matches!(r, RealRoot::Irrational { .. }))
            .map(RealRoot::approx)
            .collect();
        let s = std::f64::consts::SQRT_2 / 2.0;
        assert!((irr[0] - (-1.0 - s)).abs() < 1e-6);
        assert!((irr[1] - (-1.0 + s)).abs() < 1e-6);
    }

    #[test]
    fn repeated_and_rational_roots() {
        // (x - 1/2)^2 (x + 3)
        let p = up(&[(3, 4), (-11, 4), (2, 1), (1, 1)]);
        assert_eq!(
            real_roots(&p),
            vec![RealRoot::Rational(rat(-3, 1)), RealRoot::Rational(rat(1, 2))]
        );
        assert!(real_roots(&up(&[(1, 1), (0, 1), (1, 1)])).is_empty());
    }

    #[test]
    fn gcd_and_division() {
        let a = up(&[(-1, 1), (0, 1), (1, 1)]); // x^2 - 1
        let b = up(&[(1, 1), (1, 1)]); // x + 1
        assert_eq!(a.gcd(&b), b);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q, up(&[(-1, 1), (1, 1)]));
        assert!(r.is_zero());
    }
}

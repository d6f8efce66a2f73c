//! Formal power series of the invariant graph through the origin of the
//! chart at infinity, and of quantities restricted to it.

use num_traits::{One, Zero};

use super::poly::{rat, CoeffAffineT, ExactPoly, Rational};

type Series = Vec<Rational>;

fn mul_trunc(a: &[Rational], b: &[Rational], order: usize) -> Series {
    let mut out = vec![Rational::zero(); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Powers `φ^0 ..= φ^max` truncated at `order`.
fn powers(phi: &[Rational], max: u32, order: usize) -> Vec<Series> {
    let mut one = vec![Rational::zero(); order + 1];
    one[0] = Rational::one();
    let mut out = vec![one];
    for _ in 0..max {
        let next = mul_trunc(out.last().expect("non-empty"), phi, order);
        out.push(next);
    }
    out
}

/// `p(φ(y), y)` for an `s`-free polynomial, truncated at `order`.
fn compose_rational(p: &ExactPoly, phi: &[Rational], order: usize) -> Series {
    let pw = powers(phi, p.degree_x(), order);
    let mut out = vec![Rational::zero(); order + 1];
    for (&(i, j), c) in p.terms() {
        assert!(c.is_constant(), "field must not depend on s");
        for (k, v) in pw[i as usize].iter().enumerate() {
            if k + (j as usize) <= order {
                out[k + j as usize] += &c.c0 * v;
            }
        }
    }
    out
}

/// `p(φ(y), y)` with affine-in-`s` coefficients.
fn compose_affine(p: &ExactPoly, phi: &[Rational], order: usize) -> Vec<CoeffAffineT> {
    let pw = powers(phi, p.degree_x(), order);
    let mut out = vec![CoeffAffineT::zero(); order + 1];
    for (&(i, j), c) in p.terms() {
        for (k, v) in pw[i as usize].iter().enumerate() {
            if k + (j as usize) <= order {
                let idx = k + j as usize;
                out[idx] = &out[idx] + &c.scale(v);
            }
        }
    }
    out
}

/// Coefficients `a_k` of the graph `x = Σ a_k y^k` invariant under
/// `(ẋ, ẏ) = (p, q)`, where `p = λx + …` with `λ ≠ 0` and `q` has no linear part.
pub fn invariant_graph(p: &ExactPoly, q: &ExactPoly, order: usize) -> Series {
    let lambda = p.coeff(1, 0);
    assert!(
        lambda.is_constant() && !lambda.c0.is_zero(),
        "the x-direction must be hyperbolic"
    );
    let lambda = lambda.c0;
    let mut phi = vec![Rational::zero(); order + 1];
    for n in 1..=order {
        let lhs = {
            let dphi: Series = (0..=order)
                .map(|k| {
                    phi.get(k + 1)
                        .map_or_else(Rational::zero, |a| a * rat(k as i64 + 1, 1))
                })
                .collect();
            mul_trunc(&dphi, &compose_rational(q, &phi, order), order)
        };
        let rhs = compose_rational(p, &phi, order);
        // rhs_n still lacks λ·a_n because a_n is zero here
        phi[n] = (&lhs[n] - &rhs[n]) / &lambda;
    }
    phi
}

/// Expansion of `r` as a function of `y` along the invariant graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RSeries {
    /// Coefficient of `1/y`.
    pub inverse: Rational,
    /// Coefficients of `y^1, y^2, …` (index 0 is `y^1`).
    pub positive: Series,
}

/// Far-field data for an orbit approaching the origin of the chart along the
/// invariant graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldSeries {
    pub phi: Series,
    pub r: RSeries,
    /// Coefficients of the curve polynomial along the graph, by power of `y`.
    pub curve: Vec<CoeffAffineT>,
}

/// `dy/dr` along the graph is `g(y) = q̃(φ(y), y)`, the chart field's
/// `ẏ/y`; this inverts and integrates it termwise.
pub fn r_series(g: &[Rational]) -> RSeries {
    assert!(
        g[0].is_zero() && g[1].is_zero() && !g[2].is_zero(),
        "g must start at y^2"
    );
    let order = g.len() - 3;
    let g2 = g[2].clone();
    let u: Series = (0..=order).map(|k| &g[k + 2] / &g2).collect();
    // v = 1/u with u_0 = 1
    let mut v = vec![Rational::zero(); order + 1];
    v[0] = Rational::one();
    for n in 1..=order {
        let mut acc = Rational::zero();
        for k in 1..=n {
            acc += &u[k] * &v[n - k];
        }
        v[n] = -acc;
    }
    assert!(v[1].is_zero(), "logarithmic term in r(y)");
    let inverse = -&v[0] / &g2;
    let positive = (2..=order)
        .map(|k| &v[k] / (&g2 * rat(k as i64 - 1, 1)))
        .collect();
    RSeries { inverse, positive }
}

impl FarFieldSeries {
    /// `p`, `q` are the chart field components, `curve` the chart curve.
    pub fn compute(p: &ExactPoly, q: &ExactPoly, curve: &ExactPoly, order: usize) -> Self {
        let phi = invariant_graph(p, q, order);
        let q_over_y = q.div_y_pow(1);
        let g = compose_rational(&q_over_y, &phi, order);
        let r = r_series(&g);
        let curve = compose_affine(curve, &phi, order);
        Self { phi, r, curve }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::chart_to_infinity;

    #[test]
    fn graph_coefficients_of_the_soliton_chart() {
        let st = chart_to_infinity();
        let ff = FarFieldSeries::compute(&st.p, &st.q, &st.curve, 14);
        let expected = [
            (0, 1),
            (0, 1),
            (1, 2),
            (0, 1),
            (-1, 4),
            (0, 1),
            (1, 8),
            (0, 1),
            (-3, 16),
            (0, 1),
            (1, 32),
            (0, 1),
            (-33, 64),
            (0, 1),
            (-179, 128),
        ];
        for (k, &(n, d)) in expected.iter().enumerate() {
            assert_eq!(ff.phi[k], rat(n, d), "coefficient {k}");
        }
        assert_eq!(ff.r.inverse, rat(2, 1));
    }

    #[test]
    fn curve_along_graph_vanishes_to_order_five() {
        let st = chart_to_infinity();
        let ff = FarFieldSeries::compute(&st.p, &st.q, &st.curve, 12);
        for k in 0..6 {
            assert!(ff.curve[k].is_zero(), "order {k}");
        }
        // (1 - s)/4 y^6
        assert_eq!(ff.curve[6], CoeffAffineT::new(rat(1, 4), rat(-1, 4)));
    }
}

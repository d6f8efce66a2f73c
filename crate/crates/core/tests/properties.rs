mod common;

use common::separatrix;
use cusp_soliton::blowup::poly::{rat, Rational};
use cusp_soliton::blowup::{run_sequence, soliton_field, SequenceMode, Shadow, Step};
use cusp_soliton::evolution::{ct, dr_dt, grad_ct, pointwise_r_history, scalar_at, TimeParam};
use cusp_soliton::geometry::{curvature_at, reconstruct_profiles, sec_rx_from_f, soliton_residuals};
use cusp_soliton::phase::{integrate, IntegratorControls, PhasePoint, SolitonSign, StopRule, Trajectory};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn fenced(r_lo: f64, r_hi: f64, rel: f64) -> IntegratorControls {
    let fence = vec![
        StopRule::AbsFAbove(20.0),
        StopRule::HAbove(5.0),
        StopRule::HBelow(-5.0),
    ];
    IntegratorControls {
        rel_tol: rel,
        abs_tol: rel * 1e-2,
        r_min: r_lo,
        r_max: r_hi,
        forward_stops: fence.clone(),
        backward_stops: fence,
        ..Default::default()
    }
}

fn orbit(h: f64, f: f64, rel: f64) -> Trajectory {
    integrate(
        PhasePoint::new(h, f),
        0.0,
        &fenced(-3.0, 3.0, rel),
        SolitonSign::Expanding,
    )
    .unwrap()
}

fn common_grid(a: &Trajectory, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let lo = lo.max(a.r_min());
    let hi = hi.min(a.r_max());
    (0..=n)
        .map(|k| (lo + (hi - lo) * k as f64 / n as f64).clamp(lo, hi))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn central_symmetry(h in -0.4..0.45f64, f in -2.0..1.0f64) {
        let a = orbit(h, f, 1e-10);
        let b = orbit(-h, -f, 1e-10);
        for r in common_grid(&a, -b.r_max(), -b.r_min(), 50) {
            let (pa, pb) = (a.eval(r).unwrap(), b.eval(-r).unwrap());
            prop_assert!((pa.h_prime + pb.h_prime).abs() <= 1e-8);
            prop_assert!((pa.f_prime + pb.f_prime).abs() <= 1e-8);
        }
    }

    #[test]
    fn sec_rx_formulas_agree(h in -3.0..3.0f64, f in -10.0..10.0f64) {
        let p = PhasePoint::new(h, f);
        let scale = 1.0 + h * h + (h * f).abs();
        prop_assert!((curvature_at(0.0, p).sec_rx - sec_rx_from_f(p)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn grad_ct_matches_central_differences(
        t in -0.95..20.0f64, x in -3.0..3.0f64, y in -5.0..5.0f64,
    ) {
        let tp = TimeParam::new(t).unwrap();
        let g = grad_ct(x, y, tp);
        let e = 1e-5;
        let gx = (ct(x + e, y, tp) - ct(x - e, y, tp)) / (2.0 * e);
        let gy = (ct(x, y + e, tp) - ct(x, y - e, tp)) / (2.0 * e);
        let scale = 1.0 + g[0].abs().max(g[1].abs());
        prop_assert!((g[0] - gx).abs() <= 1e-6 * scale);
        prop_assert!((g[1] - gy).abs() <= 1e-6 * scale);
    }

    #[test]
    fn blowup_field_pullback_is_parallel(
        hn in -60i64..60, hd in 1i64..25, fn_ in 1i64..80, fd in 1i64..25,
    ) {
        let (h, f) = (rat(hn, hd), rat(-fn_, fd));
        prop_assert!(field_pullback_parallel(&h, &f));
    }
}

/// `Q = R + F² + f` is constant along every orbit, not only the separatrix.
#[test]
fn q_conserved_on_random_orbits() {
    for (h, f) in [(0.2, -0.7), (-0.3, 0.4), (0.45, -1.6)] {
        let traj = orbit(h, f, 1e-10);
        let prof = reconstruct_profiles(&traj, 0.0, 0.0).unwrap();
        let res = soliton_residuals(&traj, &prof).unwrap();
        let hi = res.iter().map(|x| x.conserved).fold(f64::MIN, f64::max);
        let lo = res.iter().map(|x| x.conserved).fold(f64::MAX, f64::min);
        assert!(hi - lo <= 1e-8, "start ({h}, {f}): drift {:e}", hi - lo);
        assert!(res
            .iter()
            .all(|x| x.trace.abs() <= 1e-8 && x.gradient.abs() <= 1e-8));
    }
}

#[test]
fn integrator_error_shrinks_with_tolerance() {
    let reference = orbit(0.3, -0.5, 1e-13);
    let err = |rel: f64| {
        let traj = orbit(0.3, -0.5, rel);
        common_grid(&traj, reference.r_min(), reference.r_max(), 200)
            .into_iter()
            .map(|r| (traj.eval(r).unwrap().h_prime - reference.eval(r).unwrap().h_prime).abs())
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = [1e-6, 1e-8, 1e-10].into_iter().map(err).collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 1e-8);
}

/// `∂R/∂t = 2C_t/s²` against a finite difference of `R` along `ṙ = F`.
#[test]
fn r_rate_matches_flow_difference() {
    let (sep, _) = separatrix();
    for (f_anchor, t) in [(-1.0, 0.5), (-3.0, 2.0), (-10.0, 10.0), (-0.5, -0.5)] {
        let r0 = sep.r_at_f(f_anchor).unwrap();
        let e = 1e-4;
        let hist = pointwise_r_history(sep, r0, &[t - e, t, t + e]).unwrap();
        let [a, b, c] = [hist.rows[0], hist.rows[1], hist.rows[2]];
        let fd = (c.scalar - a.scalar) / (2.0 * e);
        assert!(
            (fd - b.dr_dt).abs() <= 1e-6 * (1.0 + b.dr_dt.abs()),
            "F={f_anchor}, t={t}: {fd} vs {}",
            b.dr_dt
        );
        let tp = TimeParam::new(t).unwrap();
        let p = sep.eval(b.r).unwrap();
        assert_eq!(scalar_at(p, tp), b.scalar);
        assert_eq!(dr_dt(p, tp).signum(), ct(p.h_prime, p.f_prime, tp).signum());
    }
}

/// The blown-up field is parallel to the push-forward of the original field.
fn field_pullback_parallel(h: &Rational, f: &Rational) -> bool {
    let sh = Shadow::from_f64(0.3, -10.0).unwrap();
    let st = run_sequence(SequenceMode::Generic, &sh).unwrap().state;
    let (p0, q0) = soliton_field();
    let s = Rational::one();
    let (dh, df) = (p0.eval(h, f, &s), q0.eval(h, f, &s));
    // Chart x = −H/F, y = −1/F and its differential.
    let mut x = -(h / f);
    let y = -(Rational::one() / f);
    let mut dx = -((&dh * f - h * &df) / (f * f));
    let dy = &df / (f * f);
    for step in st.log().iter().skip(1) {
        match step {
            Step::Blowup { .. } => {
                dx = (&dx * &y - &x * &dy) / (&y * &y);
                x = &x / &y;
            }
            Step::Translate(a) => x = &x - a,
            Step::Chart { .. } | Step::FixS(_) => {}
        }
    }
    let (p, q) = (st.p.eval(&x, &y, &s), st.q.eval(&x, &y, &s));
    (&p * &dy - &q * &dx).is_zero()
}

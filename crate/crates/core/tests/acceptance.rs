//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to see them.

mod common;

use std::time::{Duration, Instant};

use common::{report, separatrix};
use cusp_soliton::blowup::poly::{pow_rat, rat};
use cusp_soliton::blowup::roots::UniPoly;
use cusp_soliton::blowup::{self, run_sequence, DivisorIntersection, SequenceMode, Shadow};
use cusp_soliton::evolution::{
    ct, find_crossings, grad_ct, history_grid, pointwise_r_history, psi_scan, scan_delta_threshold, PsiGrid,
    PsiVerdict, TimeParam,
};
use cusp_soliton::geometry::{
    check_asymptotics, curvature_at, curvatures, reconstruct_profiles, sec_rx_from_f, soliton_residuals,
    AsymptoticProbes, End,
};
use cusp_soliton::phase::{
    eigen_saddle, integrate, linearize, IntegratorControls, PhasePoint, SolitonSign, StopRule,
};
use cusp_soliton::separatrix::{certify_barriers, Verdict, MIN_BARRIER_SAMPLES};

const SQRT5: f64 = 2.236_067_977_499_79;

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

#[test]
fn criterion_1_saddle_data() {
    let [u, s] = eigen_saddle(&linearize(PhasePoint::SADDLE)).unwrap();
    let errs = [
        (u.value - (SQRT5 - 1.0) / 2.0).abs(),
        (s.value - (-SQRT5 - 1.0) / 2.0).abs(),
        (u.vector[1] / u.vector[0] - (3.0 + SQRT5)).abs(),
        (s.vector[1] / s.vector[0] - (3.0 - SQRT5)).abs(),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let pass = worst <= 1e-12;
    report("1", pass, format!("max error {worst:.3e}, tol 1e-12"));
    assert!(pass);
}

#[test]
fn criterion_2_conservation() {
    let t0 = Instant::now();
    let (sep, shoot) = separatrix();
    let prof = reconstruct_profiles(&sep.orbit, 0.0, 0.0).unwrap();
    let res = soliton_residuals(&sep.orbit, &prof).unwrap();
    let window: Vec<_> = res.iter().filter(|x| (-30.0..=100.0).contains(&x.r)).collect();
    let q_hi = window.iter().map(|x| x.conserved).fold(f64::MIN, f64::max);
    let q_lo = window.iter().map(|x| x.conserved).fold(f64::MAX, f64::min);
    let drift = q_hi - q_lo;
    let trace = window.iter().map(|x| x.trace.abs()).fold(0.0, f64::max);
    let grad = window.iter().map(|x| x.gradient.abs()).fold(0.0, f64::max);
    let elapsed = t0.elapsed() + *shoot;
    let pass = !window.is_empty() && drift <= 1e-8 && trace <= 1e-8 && grad <= 1e-8 && within(elapsed, 5.0);
    report(
        "2",
        pass,
        format!(
            "{} samples, Q drift {drift:.3e}, trace {trace:.3e}, gradient {grad:.3e}, {:.2}s",
            window.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_pinching() {
    let t0 = Instant::now();
    let (sep, shoot) = separatrix();
    let curv = curvatures(&sep.orbit);
    let pinched = curv
        .iter()
        .all(|c| -0.25 < c.sec_xy && c.sec_xy < 0.0 && -0.25 < c.sec_rx && c.sec_rx < 0.0);
    let first = curv.first().unwrap();
    let last = curv.last().unwrap();
    let cusp_err = (first.sec_xy + 0.25).abs();
    let flat = [
        last.sec_xy,
        last.sec_rx,
        last.scalar,
        last.ric_rr,
        last.ric_tangential,
    ]
    .iter()
    .map(|v| v.abs())
    .fold(0.0, f64::max);
    let elapsed = t0.elapsed() + *shoot;
    let pass = pinched && cusp_err <= 1e-6 && flat < 1e-6 && within(elapsed, 5.0);
    report(
        "3",
        pass,
        format!(
            "{} samples pinched: {pinched}, cusp |sec_xy + 1/4| {cusp_err:.3e}, flat max |curvature| {flat:.3e}, {:.2}s",
            curv.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_asymptotics() {
    let t0 = Instant::now();
    let (sep, shoot) = separatrix();
    let prof = reconstruct_profiles(&sep.orbit, 0.0, 0.0).unwrap();
    let reports = check_asymptotics(&sep.orbit, &prof, &AsymptoticProbes::default());
    let cusp = reports.iter().find(|r| r.end == End::Cusp).unwrap();
    let flat = reports.iter().find(|r| r.end == End::Flat).unwrap();

    let ratio = cusp.entry("(h-r/2)/(f-f0)").unwrap().measured;
    let ratio_ok = ((ratio - (3.0 + SQRT5)) / (3.0 + SQRT5)).abs() < 0.01;
    let p = sep.orbit.eval(500.0).unwrap();
    let v = cusp_soliton::phase::vector_field(p, SolitonSign::Expanding);
    let hf = (p.h_prime * p.f_prime + 0.5).abs();
    let fp = (v.f_second + 0.5).abs();
    let hr = p.h_prime * 500.0;
    let hr_ok = (hr - 1.0).abs() < 0.02 && flat.hr_trend_decreasing == Some(true);
    let elapsed = t0.elapsed() + *shoot;
    let pass = ratio_ok && hf < 1e-3 && fp < 1e-3 && hr_ok && within(elapsed, 30.0);
    report(
        "4",
        pass,
        format!(
            "(h-r/2)/(f-f0) at r=-30 = {ratio:.6} vs 3+sqrt5 [{}]; |HF+1/2| {hf:.3e}; |F'+1/2| {fp:.3e}; H*r {hr:.6}, decreasing {:?} [{}]; {:.2}s",
            if ratio_ok { "ok" } else { "off" },
            flat.hr_trend_decreasing,
            if hr_ok { "ok" } else { "off" },
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_barriers() {
    let (sep, _) = separatrix();
    let reports = certify_barriers(sep);
    let mut pass = reports.len() == 5;
    let mut detail = Vec::new();
    for r in &reports {
        let ok =
            r.verdict == Verdict::Barrier && r.min_margin > 0.0 && r.margins.len() >= MIN_BARRIER_SAMPLES;
        pass &= ok;
        detail.push(format!(
            "{} min {:.3e} over {}",
            r.curve.id(),
            r.min_margin,
            r.margins.len()
        ));
    }
    report("5", pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_6_blowup() {
    let t0 = Instant::now();
    let (sep, _) = separatrix();
    let p = sep.eval(sep.r_at_f(-10.0).unwrap()).unwrap();
    let shadow = Shadow::from_f64(p.h_prime, p.f_prime).unwrap();
    let generic = run_sequence(SequenceMode::Generic, &shadow).unwrap();
    let fixed = run_sequence(SequenceMode::Fixed(1, 1), &shadow).unwrap();
    // (s − 1)/(8s)
    let num = UniPoly::new(vec![rat(-1, 1), rat(1, 1)]);
    let den = UniPoly::new(vec![rat(0, 1), rat(8, 1)]);
    let generic_ok =
        generic.blowups == 6 && generic.abscissa.equals_ratio(&num, &den) && generic.contact_order == 5;
    let fixed_abscissa_ok = match &fixed.abscissa {
        DivisorIntersection::Linear { .. } => fixed.abscissa.eval(&rat(1, 1)) == Some(rat(1, 8)),
        _ => false,
    };
    let fixed_ok = fixed.blowups == 10 && fixed_abscissa_ok && fixed.contact_order == 9;
    let elapsed = t0.elapsed();
    let pass = generic_ok && fixed_ok && within(elapsed, 10.0);
    report(
        "6",
        pass,
        format!(
            "generic: {} blow-ups, abscissa {}, contact {}; s=1: {} blow-ups, abscissa {}, contact {}; {:.2}s",
            generic.blowups,
            generic.abscissa,
            generic.contact_order,
            fixed.blowups,
            fixed.abscissa,
            fixed.contact_order,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_evolution_dichotomy() {
    let t0 = Instant::now();
    let (sep, _) = separatrix();
    let tp = |t: f64| TimeParam::new(t).unwrap();
    let grid = PsiGrid::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for t in [0.0, 1.0, 10.0] {
        let n = find_crossings(sep, tp(t)).crossings.len();
        pass &= n >= 1;
        detail.push(format!("t={t}: {n} crossing(s)"));
    }
    let neg = find_crossings(sep, tp(-0.7)).crossings.len();
    let psi_neg = psi_scan(tp(-0.7), &grid).unwrap();
    pass &= neg == 0 && psi_neg.verdict == PsiVerdict::Positive;
    detail.push(format!("t=-0.7: {neg} crossings, psi {:?}", psi_neg.verdict));
    let psi_mid = psi_scan(tp(-0.2), &grid).unwrap();
    pass &= psi_mid.verdict == PsiVerdict::SignChanging;
    detail.push(format!("t=-0.2: psi {:?}", psi_mid.verdict));

    let t_grid = [
        -0.9, -0.7, -0.5, -0.3, -0.2, -0.1, -0.05, -0.01, 0.0, 0.5, 1.0, 10.0,
    ];
    let est = scan_delta_threshold(sep, &t_grid, &grid).unwrap();
    let inside = |b: Option<(f64, f64)>| b.is_some_and(|(lo, hi)| lo > -0.7 && hi < 0.0);
    pass &= inside(est.crossing_bracket) && inside(est.barrier_bracket);
    detail.push(format!(
        "delta crossing bracket {:?}, psi bracket {:?}",
        est.crossing_bracket, est.barrier_bracket
    ));
    let elapsed = t0.elapsed();
    pass &= within(elapsed, 60.0);
    detail.push(format!("{:.2}s", elapsed.as_secs_f64()));
    report("7", pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_8_pointwise_histories() {
    let (sep, _) = separatrix();
    let grid = history_grid(1e3, 200);
    let mut pass = true;
    let mut detail = Vec::new();
    for f_anchor in [-1.0, -10.0] {
        let r0 = sep.r_at_f(f_anchor).unwrap();
        let hist = pointwise_r_history(sep, r0, &grid).unwrap();
        let negative = hist.rows.iter().all(|row| row.scalar < 0.0);
        let after = hist.last_sign_change.unwrap_or(f64::NEG_INFINITY);
        let rising = hist
            .rows
            .iter()
            .filter(|row| row.t > after)
            .all(|row| row.dr_dt > 0.0);
        let tail = &hist.rows[hist.rows.len() - 2..];
        let decaying = tail[1].scalar.abs() < tail[0].scalar.abs();
        let ok = !hist.truncated && negative && rising && decaying;
        pass &= ok;
        detail.push(format!(
            "F={f_anchor}: R<0 {negative}, dR/dt>0 after {:?} {rising}, |R| {:.4e} -> {:.4e}",
            hist.last_sign_change,
            tail[0].scalar.abs(),
            tail[1].scalar.abs()
        ));
    }
    report("8", pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_9_property_suites() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);

    // Central symmetry: if (H, F)(r) is an orbit, so is −(H, F)(−r).
    let fence = vec![
        StopRule::AbsFAbove(20.0),
        StopRule::HAbove(5.0),
        StopRule::HBelow(-5.0),
    ];
    let controls = IntegratorControls {
        r_min: -2.0,
        r_max: 2.0,
        forward_stops: fence.clone(),
        backward_stops: fence,
        ..Default::default()
    };
    let mut sym = 0.0f64;
    for _ in 0..5 {
        let start = PhasePoint::new(rng.gen_range(0.1..0.45), rng.gen_range(-1.5..-0.2));
        let a = integrate(start, 0.0, &controls, SolitonSign::Expanding).unwrap();
        let b = integrate(
            PhasePoint::new(-start.h_prime, -start.f_prime),
            0.0,
            &controls,
            SolitonSign::Expanding,
        )
        .unwrap();
        for k in 0..=40 {
            let r = a.r_min().max(-b.r_max())
                + (a.r_max().min(-b.r_min()) - a.r_min().max(-b.r_max())) * k as f64 / 40.0;
            let (pa, pb) = (a.eval(r).unwrap(), b.eval(-r).unwrap());
            sym = sym
                .max((pa.h_prime + pb.h_prime).abs())
                .max((pa.f_prime + pb.f_prime).abs());
        }
    }

    // sec_rx from H'' against sec_rx from F'.
    let (sep, _) = separatrix();
    let sec = sep
        .orbit
        .samples()
        .map(|(r, p)| (curvature_at(r, p).sec_rx - sec_rx_from_f(p)).abs())
        .fold(0.0, f64::max);

    // Exact pullback of C_t through the generic sequence.
    let p = sep.eval(sep.r_at_f(-10.0).unwrap()).unwrap();
    let rep = run_sequence(
        SequenceMode::Generic,
        &Shadow::from_f64(p.h_prime, p.f_prime).unwrap(),
    )
    .unwrap();
    let pull = pullback_failures(&rep.state, &mut rng, 100);

    // ∇C_t against central differences.
    let mut grad_err = 0.0f64;
    for _ in 0..200 {
        let tp = TimeParam::new(rng.gen_range(-0.9..10.0)).unwrap();
        let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
        let g = grad_ct(x, y, tp);
        let e = 1e-5;
        let gx = (ct(x + e, y, tp) - ct(x - e, y, tp)) / (2.0 * e);
        let gy = (ct(x, y + e, tp) - ct(x, y - e, tp)) / (2.0 * e);
        let scale = 1.0 + g[0].abs().max(g[1].abs());
        grad_err = grad_err
            .max((g[0] - gx).abs() / scale)
            .max((g[1] - gy).abs() / scale);
    }

    let pass = sym <= 1e-8 && sec <= 1e-10 && pull == 0 && grad_err <= 1e-6;
    report(
        "9",
        pass,
        format!(
            "symmetry {sym:.3e}; sec_rx agreement {sec:.3e}; pullback failures {pull}/100; grad C_t {grad_err:.3e}"
        ),
    );
    assert!(pass);
}

/// Checks `C_final(x, y)·y^M = y^d·C(H, F)` at random rational phase points.
fn pullback_failures(st: &blowup::BlowupState, rng: &mut impl rand::Rng, n: usize) -> usize {
    let d = st.source_curve().total_degree() as i32;
    let m: u32 = st.curve_multiplicities().iter().sum();
    let mut failures = 0;
    for _ in 0..n {
        let h = rat(rng.gen_range(-50..50), rng.gen_range(1..20));
        let f = rat(-rng.gen_range(1..60), rng.gen_range(1..20));
        let s = rat(rng.gen_range(1..40), rng.gen_range(1..9));
        let (x, y) = st.map_phase_point(&h, &f).unwrap();
        let lhs = st.curve.eval(&x, &y, &s) * pow_rat(&y, m as i32);
        let rhs = st.source_curve().eval(&h, &f, &s) * pow_rat(&y, d);
        if lhs != rhs {
            failures += 1;
        }
    }
    failures
}

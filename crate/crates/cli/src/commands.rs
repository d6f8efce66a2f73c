use anyhow::Result;
use cusp_soliton::blowup::{
    run_sequence, run_sequence_with, text, vertical_isocline_polynomial, BlowupReport, SequenceMode, Shadow,
};
use cusp_soliton::evolution::{
    find_crossings, history_grid, pointwise_r_history, psi_scan, scan_delta_threshold, CrossingReport,
    PsiScan, RHistory, TimeParam,
};
use cusp_soliton::geometry::{
    check_asymptotics, curvature_at, reconstruct_profiles, soliton_residuals, AsymptoticsReport,
    CurvatureSample,
};
use cusp_soliton::phase::PhasePoint;
use cusp_soliton::separatrix::{
    certify_barriers, isocline_f, shoot_separatrix, IsoclineKind, Separatrix, Verdict,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{Emitter, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    RangeInsufficient,
}

impl Status {
    pub fn and(self, o: Status) -> Status {
        if self == Status::Complete {
            o
        } else {
            self
        }
    }
}

pub fn shoot(cfg: &RunConfig) -> Result<Separatrix> {
    Ok(shoot_separatrix(&cfg.shoot_config())?)
}

/// Sample indices thinned by `stride`, always keeping both ends.
fn strided(n: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if n > 0 && idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

#[derive(Serialize)]
struct BarrierSummary {
    id: &'static str,
    samples: usize,
    min_margin: f64,
    argmin_r: f64,
    verdict: Verdict,
}

#[derive(Serialize)]
struct SeparatrixSummary {
    samples: usize,
    r_min: f64,
    r_max: f64,
    start: PhasePoint,
    unstable_direction: [f64; 2],
    reaches_saddle: bool,
    far_field_r_switch: f64,
    far_field_r_c: f64,
    far_field_match_error: f64,
}

pub fn separatrix(cfg: &RunConfig, sep: &Separatrix, em: &mut Emitter) -> Result<Status> {
    let orbit = &sep.orbit;
    let prof = reconstruct_profiles(orbit, 0.0, 0.0)?;
    let mut t = Table::new("separatrix", &["r", "H", "F", "h", "f"]);
    for i in strided(orbit.len(), cfg.stride) {
        let p = orbit.points()[i];
        t.push(vec![prof.r[i], p.h_prime, p.f_prime, prof.h[i], prof.f[i]]);
    }
    em.table(&t)?;

    let mut iso = Table::new("isoclines", &["H", "vertical", "horizontal", "oblique"]);
    let n = cfg.isocline_points;
    for k in 1..=n {
        let h = 0.75 * k as f64 / n as f64;
        let mut row = vec![h];
        for kind in IsoclineKind::ALL {
            row.push(isocline_f(kind, h)?);
        }
        iso.push(row);
    }
    em.table(&iso)?;

    let barriers: Vec<BarrierSummary> = certify_barriers(sep)
        .into_iter()
        .map(|b| BarrierSummary {
            id: b.curve.id(),
            samples: b.margins.len(),
            min_margin: b.min_margin,
            argmin_r: b.argmin_r,
            verdict: b.verdict,
        })
        .collect();
    em.json("barriers.json", &barriers)?;
    em.json(
        "separatrix_summary.json",
        &SeparatrixSummary {
            samples: orbit.len(),
            r_min: orbit.r_min(),
            r_max: orbit.r_max(),
            start: sep.start,
            unstable_direction: sep.unstable_direction,
            reaches_saddle: sep.reaches_saddle,
            far_field_r_switch: sep.far_field.r_switch,
            far_field_r_c: sep.far_field.r_c,
            far_field_match_error: sep.far_field.match_error,
        },
    )?;
    Ok(Status::Complete)
}

const CURVATURE_COLUMNS: [&str; 8] = [
    "r",
    "sec_xy",
    "sec_rx",
    "R",
    "Ric_rr",
    "Ric_tan",
    "lap_f",
    "grad_f_sq",
];

fn curvature_row(c: &CurvatureSample) -> Vec<f64> {
    vec![
        c.r,
        c.sec_xy,
        c.sec_rx,
        c.scalar,
        c.ric_rr,
        c.ric_tangential,
        c.laplacian_f,
        c.grad_f_sq,
    ]
}

pub fn curvature(cfg: &RunConfig, sep: &Separatrix, em: &mut Emitter) -> Result<Status> {
    let orbit = &sep.orbit;
    let mut t = Table::new("curvature", &CURVATURE_COLUMNS);
    let idx = strided(orbit.len(), cfg.stride);
    for &i in &idx {
        t.push(curvature_row(&curvature_at(orbit.r()[i], orbit.points()[i])));
    }
    em.table(&t)?;

    // the stationary cusp soliton sitting at the saddle
    let mut saddle = Table::new("curvature_saddle", &CURVATURE_COLUMNS);
    saddle.push(curvature_row(&curvature_at(0.0, PhasePoint::SADDLE)));
    em.table(&saddle)?;

    let prof = reconstruct_profiles(orbit, 0.0, 0.0)?;
    let res = soliton_residuals(orbit, &prof)?;
    let mut rt = Table::new("residuals", &["r", "trace", "gradient", "conserved"]);
    for &i in &idx {
        let x = &res[i];
        rt.push(vec![x.r, x.trace, x.gradient, x.conserved]);
    }
    em.table(&rt)?;
    Ok(Status::Complete)
}

#[derive(Serialize)]
struct AsymptoticsOut<'a> {
    cusp_offset: f64,
    f0: f64,
    reports: &'a [AsymptoticsReport],
    range_sufficient: bool,
}

pub fn asymptotics(cfg: &RunConfig, sep: &Separatrix, em: &mut Emitter) -> Result<Status> {
    let prof = reconstruct_profiles(&sep.orbit, 0.0, 0.0)?;
    let reports = check_asymptotics(&sep.orbit, &prof, &cfg.probes());
    let ok = reports.iter().all(AsymptoticsReport::range_sufficient);
    em.json(
        "asymptotics.json",
        &AsymptoticsOut {
            cusp_offset: prof.cusp_offset,
            f0: prof.f0,
            reports: &reports,
            range_sufficient: ok,
        },
    )?;
    Ok(if ok {
        Status::Complete
    } else {
        Status::RangeInsufficient
    })
}

fn t_label(t: f64) -> String {
    format!("t{t}")
}

#[derive(Serialize)]
struct EvolveRow {
    t: f64,
    crossings: CrossingReport,
    psi_verdict: cusp_soliton::evolution::PsiVerdict,
    psi_min: f64,
    psi_argmin_y: f64,
    psi_tail_coefficient: f64,
}

#[derive(Serialize)]
struct HistorySummary {
    f_anchor: f64,
    r0: f64,
    truncated: bool,
    last_sign_change: Option<f64>,
    scalar_always_negative: bool,
}

pub fn evolve(cfg: &RunConfig, sep: &Separatrix, em: &mut Emitter) -> Result<Status> {
    let per_t: Vec<(CrossingReport, PsiScan)> = cfg
        .t_grid
        .par_iter()
        .map(|&t| -> Result<_> {
            let tp = TimeParam::new(t)?;
            Ok((find_crossings(sep, tp), psi_scan(tp, &cfg.psi_grid())?))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (cr, ps) in per_t {
        let mut ct = Table::new(format!("crossings_{}", t_label(cr.t)), &["r", "H", "F"]);
        for c in &cr.crossings {
            ct.push(vec![c.r, c.h, c.f]);
        }
        em.table(&ct)?;
        let mut pt = Table::new(format!("psi_{}", t_label(ps.t)), &["y", "psi"]);
        for (&y, &v) in ps.y.iter().zip(&ps.psi) {
            pt.push(vec![y, v]);
        }
        em.table(&pt)?;
        rows.push(EvolveRow {
            t: cr.t,
            crossings: cr,
            psi_verdict: ps.verdict,
            psi_min: ps.min_value,
            psi_argmin_y: ps.argmin_y,
            psi_tail_coefficient: ps.tail_coefficient,
        });
    }
    em.json("evolve.json", &rows)?;

    let delta = scan_delta_threshold(sep, &cfg.delta_grid, &cfg.psi_grid())?;
    em.json("delta.json", &delta)?;

    let grid = history_grid(cfg.history_t_max, cfg.history_points);
    let histories: Vec<(f64, RHistory)> = cfg
        .history_anchors
        .par_iter()
        .map(|&f| -> Result<_> {
            let r0 = sep
                .r_at_f(f)
                .ok_or_else(|| anyhow::anyhow!("separatrix never reaches F = {f}"))?;
            Ok((f, pointwise_r_history(sep, r0, &grid)?))
        })
        .collect::<Result<_>>()?;
    let mut summary = Vec::new();
    for (f, h) in &histories {
        let mut t = Table::new(format!("history_F{f}"), &["t", "r", "R", "dRdt"]);
        for row in &h.rows {
            t.push(vec![row.t, row.r, row.scalar, row.dr_dt]);
        }
        em.table(&t)?;
        summary.push(HistorySummary {
            f_anchor: *f,
            r0: h.r0,
            truncated: h.truncated,
            last_sign_change: h.last_sign_change,
            scalar_always_negative: h.rows.iter().all(|r| r.scalar < 0.0),
        });
    }
    em.json("histories.json", &summary)?;
    Ok(Status::Complete)
}

#[derive(Serialize)]
struct BlowupSummary {
    name: &'static str,
    mode: String,
    blowups: usize,
    contact_order: usize,
    translations: Vec<(usize, String)>,
    final_critical_point: String,
    abscissa: String,
    curve_multiplicities: Vec<u32>,
}

fn blowup_summary(name: &'static str, r: &BlowupReport) -> BlowupSummary {
    BlowupSummary {
        name,
        mode: text::mode(r.mode),
        blowups: r.blowups,
        contact_order: r.contact_order,
        translations: r.translations.iter().map(|(k, a)| (*k, a.to_string())).collect(),
        final_critical_point: r.final_critical_point.to_string(),
        abscissa: r.abscissa.to_string(),
        curve_multiplicities: r.state.curve_multiplicities(),
    }
}

pub fn blowup(sep: &Separatrix, em: &mut Emitter) -> Result<Status> {
    // the shadow only selects the critical point to follow; F = -10 is deep in the far field
    let r = sep
        .r_at_f(-10.0)
        .ok_or_else(|| anyhow::anyhow!("separatrix never reaches F = -10"))?;
    let p = sep.eval(r)?;
    let shadow = Shadow::from_f64(p.h_prime, p.f_prime)?;
    let runs = [
        ("generic", run_sequence(SequenceMode::Generic, &shadow)?),
        ("s_one", run_sequence(SequenceMode::Fixed(1, 1), &shadow)?),
        (
            "vertical_isocline",
            run_sequence_with(vertical_isocline_polynomial(), SequenceMode::Generic, &shadow)?,
        ),
    ];
    let mut summary = Vec::new();
    for (name, rep) in &runs {
        em.write(&format!("blowup_{name}.txt"), &text::report(rep))?;
        summary.push(blowup_summary(name, rep));
    }
    em.json("blowup.json", &summary)?;
    Ok(Status::Complete)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_keeps_both_ends() {
        assert_eq!(strided(10, 4), vec![0, 4, 8, 9]);
        assert_eq!(strided(9, 4), vec![0, 4, 8]);
        assert_eq!(strided(1, 4), vec![0]);
        assert!(strided(0, 4).is_empty());
    }

    #[test]
    fn status_keeps_first_problem() {
        assert_eq!(
            Status::Complete.and(Status::RangeInsufficient),
            Status::RangeInsufficient
        );
        assert_eq!(
            Status::RangeInsufficient.and(Status::Complete),
            Status::RangeInsufficient
        );
    }
}

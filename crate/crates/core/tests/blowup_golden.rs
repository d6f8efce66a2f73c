//! Canonical text of the blow-up sequences. Set `CUSP_BLESS=1` to rewrite.

mod common;

use std::path::PathBuf;

use common::separatrix;
use cusp_soliton::blowup::{
    run_sequence, run_sequence_with, text, vertical_isocline_polynomial, BlowupReport, SequenceMode, Shadow,
};

fn shadow() -> Shadow {
    let (sep, _) = separatrix();
    let p = sep.eval(sep.r_at_f(-10.0).unwrap()).unwrap();
    Shadow::from_f64(p.h_prime, p.f_prime).unwrap()
}

fn check(name: &str, rep: &BlowupReport) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    let got = text::report(rep);
    if std::env::var_os("CUSP_BLESS").is_some() {
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(got, want, "{name} drifted; rerun with CUSP_BLESS=1 if intended");
}

#[test]
fn generic_sequence() {
    check(
        "generic.txt",
        &run_sequence(SequenceMode::Generic, &shadow()).unwrap(),
    );
}

#[test]
fn fixed_s_one_sequence() {
    check(
        "s_one.txt",
        &run_sequence(SequenceMode::Fixed(1, 1), &shadow()).unwrap(),
    );
}

#[test]
fn vertical_isocline_sequence() {
    let rep = run_sequence_with(vertical_isocline_polynomial(), SequenceMode::Generic, &shadow()).unwrap();
    check("vertical_isocline.txt", &rep);
}

#[test]
fn report_text_is_independent_of_shadow_precision() {
    let coarse = Shadow::from_f64(0.3, -10.0).unwrap();
    let a = text::report(&run_sequence(SequenceMode::Generic, &coarse).unwrap());
    let b = text::report(&run_sequence(SequenceMode::Generic, &shadow()).unwrap());
    assert_eq!(a, b);
}

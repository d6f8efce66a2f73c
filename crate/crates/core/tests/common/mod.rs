#![allow(dead_code)]

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cusp_soliton::separatrix::{shoot_separatrix, Separatrix, ShootConfig};

static DEFAULT: OnceLock<(Separatrix, Duration)> = OnceLock::new();

/// Default separatrix, shot once per test binary, with its shooting time.
pub fn separatrix() -> &'static (Separatrix, Duration) {
    DEFAULT.get_or_init(|| {
        let t0 = Instant::now();
        let sep = shoot_separatrix(&ShootConfig::default()).expect("default separatrix");
        (sep, t0.elapsed())
    })
}

pub fn report(id: &str, pass: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {id}: {} ({})",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

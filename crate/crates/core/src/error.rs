use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid integrator controls: {0}")]
    InvalidControls(String),
    #[error("step size underflow at r = {r} (h = {h:e})")]
    StepUnderflow { r: f64, h: f64 },
    #[error("non-finite state at r = {r}")]
    NonFinite { r: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("matrix has {0} eigenvalues; a real distinct pair is required")]
    EigenStructure(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("separatrix left the band 0 < H < 1/2 at r = {r} (H = {h})")]
    LeftBand { r: f64, h: f64 },
    #[error("r = {r} lies outside the computed range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },
    #[error("trajectory is not monotone in r")]
    NonMonotone,
    #[error("blow-up engine: {0}")]
    Blowup(String),
}

pub type Result<T> = std::result::Result<T, Error>;

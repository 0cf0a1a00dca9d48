use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("bootstrap amplitude exceeded: max |z| = {0:.3e} >= 1/2")]
    BootstrapAmplitude(f64),
    #[error("CFL violation: |dt| = {dt:.3e} exceeds limit {limit:.3e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("input not divergence-free: relative divergence {0:.3e}")]
    NotDivergenceFree(f64),
    #[error("free-space assumption violated: boundary/peak ratio {0:.3e}")]
    FreeSpaceViolated(f64),
    #[error("non-finite values at t = {t:.6}: {what}")]
    NonFinite { t: f64, what: String },
    #[error("time {t:.6} outside trajectory span [{start:.6}, {end:.6}]")]
    OutsideTrajectory { t: f64, start: f64, end: f64 },
    #[error("too few snapshots: need {need}, have {have}")]
    TooFewSnapshots { need: usize, have: usize },
    #[error("insufficient snapshot density: interpolation error estimate {estimate:.3e} > {tolerance:.3e}")]
    SnapshotDensity { estimate: f64, tolerance: f64 },
    #[error("order {order} beyond configured maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("horizon |T| = {horizon:.3} exceeds validity window L3/4 = {window:.3}")]
    ValidityWindow { horizon: f64, window: f64 },
    #[error("label {0:?} outside the initial grid hull")]
    LabelOutsideHull([f64; 3]),
    #[error("level set exits the trusted window: {0}")]
    LevelSetWindow(String),
    #[error("weight admissibility violated: {0}")]
    WeightAdmissibility(String),
    #[error("unresolved regime: {0}")]
    UnresolvedRegime(String),
    #[error("outside local-diffeomorphism basin: {0}")]
    OutsideBasin(String),
    #[error("labels not tracked by this trajectory")]
    LabelsNotTracked,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

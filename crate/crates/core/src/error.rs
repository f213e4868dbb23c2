use thiserror::Error;

/// Unified error type for the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shock amplitude eps = {eps} must be below p(v_minus) = {p_minus}")]
    AmplitudeTooLarge { eps: f64, p_minus: f64 },

    #[error("degenerate shock: eps = 0 produces no jump")]
    DegenerateShock,

    #[error("domain too short: eps * L / nu = {eps_l} < 20, shock tails unresolved")]
    DomainTooShort { eps_l: f64 },

    #[error("profile construction failed: {0}")]
    ProfileConstruction(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("vacuum proximity at t = {t}: min v = {min_v} at or below floor {floor}")]
    VacuumProximity { t: f64, min_v: f64, floor: f64 },

    #[error("numerical blowup at t = {t}: {what}")]
    NumericalBlowup { t: f64, what: String },

    #[error("shift window exceeded at t = {t}: |X| = {x} > L/4 = {window}")]
    ShiftWindow { t: f64, x: f64, window: f64 },

    #[error("configuration invalid:\n{}", violations.join("\n"))]
    Config { violations: Vec<String> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

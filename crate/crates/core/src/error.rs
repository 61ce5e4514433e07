use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid ramp protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("time {t} outside the protocol domain [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },

    #[error("static mode is degenerate at g = {g}, k = {k} (gap {gap:e})")]
    Degenerate { g: f64, k: f64, gap: f64 },

    #[error("integration failed for mode k = {k} at t = {t}: {reason}")]
    Integration { k: f64, t: f64, reason: String },

    #[error("mode states do not cover the momentum grid; missing k = {missing:?}")]
    IncompleteGrid { missing: Vec<f64> },

    #[error("distance R = {r} outside the valid range [{min}, {max}]")]
    OutOfRange { r: usize, min: usize, max: usize },

    #[error("usage: {0}")]
    Usage(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("correlator order M = {m} exceeds the permutation-cost guard (M <= {max})")]
    CostGuard { m: usize, max: usize },

    #[error("Toeplitz dimension R = {r} exceeds the guard {max}")]
    DimensionGuard { r: usize, max: usize },

    #[error("ill-conditioned determinant at R = {r}: LU gives {lu:e}, recursion gives {recursion:e}")]
    Conditioning { r: usize, lu: f64, recursion: f64 },

    #[error("fit failed: relative residual {residual:e} above threshold {threshold:e}")]
    FitFailure { residual: f64, threshold: f64 },

    #[error("ground state is degenerate: lowest levels {e0} and {e1}")]
    DegenerateGround { e0: f64, e1: f64 },
}

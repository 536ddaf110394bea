use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("grid too coarse for the M-matrix condition (n = {n}); refine to at least n = {min_n}")]
    GridTooCoarse { n: usize, min_n: usize },

    #[error("{what} did not converge after {iterations} iterations (last increment {increment:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        increment: f64,
    },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("singular elimination at row {row}")]
    Singular { row: usize },

    #[error("resolvent shift below spectral bound (shift {shift}, principal eigenvalue {bound})")]
    ResolventShift { shift: f64, bound: f64 },

    #[error("extinction: no positive steady state (principal eigenvalue {lambda:e} <= 0)")]
    Extinction { lambda: f64 },

    #[error("steady state not reached before t = {t_cap} (last derivative norm {rate:e})")]
    SteadyStateNotReached { t_cap: f64, rate: f64 },

    #[error("no positive speed: principal eigenvalue at mu=0 nonpositive ({lambda:e})")]
    NoPositiveSpeed { lambda: f64 },

    #[error("objective monotone decreasing in bracket: infimum estimate {estimate} at mu = {mu} (unconverged)")]
    MonotoneObjective { mu: f64, estimate: f64 },

    #[error("steady-state inconsistency: lambda2(0) = {lambda:e}")]
    SteadyStateInconsistency { lambda: f64 },

    #[error("stationary point not bracketed; s(lambda) table: {table:?}")]
    StationaryNotBracketed { table: Vec<(f64, f64)> },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("undershoot clipping at step {step} touched {count} of {nodes} nodes")]
    ClipOverflow {
        step: usize,
        count: usize,
        nodes: usize,
    },

    #[error("boundary-contaminated run: front at x = {position} within {cells} cells of the right boundary at t = {time}")]
    BoundaryContaminated {
        time: f64,
        position: f64,
        cells: usize,
    },

    #[error("no invasion front: u1 collapsed below the tracking level")]
    NoFront,
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the controller, the models and the integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A function was evaluated outside its domain (e.g. the funnel at t >= T).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    /// Cascade level `level` (1-based) left the open unit ball.
    #[error("funnel violation at t = {time}: |e_{level}| = {norm} >= 1")]
    FunnelViolation { level: usize, norm: f64, time: f64 },

    #[error("no feasible funnel scale c on the candidate grid (best max |e_k(0)| = {best_norm})")]
    NoFeasibleC { best_norm: f64 },

    /// Adaptive step size dropped below the configured minimum.
    #[error("step size underflow at t = {time} (remaining {remaining}): h = {step} < h_min")]
    StepUnderflow {
        time: f64,
        remaining: f64,
        step: f64,
    },

    #[error("step limit of {0} exceeded")]
    StepLimit(usize),

    /// A history lookup requested a time outside the recorded span.
    #[error("history underrun: requested s = {requested}, available [{start}, {end}]")]
    HistoryUnderrun {
        requested: f64,
        start: f64,
        end: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

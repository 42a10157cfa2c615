//! Time instants on the finite horizon `[0, T)`.
//!
//! Near the end of the horizon the funnel needs `T - t` far more accurately
//! than `t` itself, so an instant carries both the elapsed time and the
//! remaining time. The integrator updates the two independently.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePoint {
    /// Time since the start of the run, `t`.
    pub elapsed: f64,
    /// Time left until the horizon, `T - t`.
    pub remaining: f64,
}

impl TimePoint {
    /// Instant `t` on a horizon of length `horizon`.
    pub fn at(t: f64, horizon: f64) -> Self {
        Self {
            elapsed: t,
            remaining: horizon - t,
        }
    }

    /// Instant that lies `remaining` before the horizon.
    pub fn before_horizon(remaining: f64, horizon: f64) -> Self {
        Self {
            elapsed: horizon - remaining,
            remaining,
        }
    }

    pub fn start(horizon: f64) -> Self {
        Self {
            elapsed: 0.0,
            remaining: horizon,
        }
    }

    /// Moves both clocks forward by `h`.
    pub fn advance(self, h: f64) -> Self {
        Self {
            elapsed: self.elapsed + h,
            remaining: self.remaining - h,
        }
    }

    /// Rejects instants outside `[0, T)`.
    pub fn check_in_horizon(&self) -> Result<()> {
        if !(self.elapsed >= 0.0) {
            return Err(Error::domain(format!("time {} is negative", self.elapsed)));
        }
        if !(self.remaining > 0.0) {
            return Err(Error::domain(format!(
                "time {} is not before the horizon (remaining {})",
                self.elapsed, self.remaining
            )));
        }
        Ok(())
    }
}

use crate::error::{Error, Result};
use crate::signals::Jet;
use crate::time::TimePoint;

/// Funnel function `phi(t) = 1 / (c (T - t))` on `[0, T)`.
///
/// The performance funnel is `{(t, e) : phi(t) |e| < 1}`; its radius at
/// time `t` is `1 / phi(t) = c (T - t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelFunction {
    horizon: f64,
    scale: f64,
}

impl FunnelFunction {
    pub fn new(horizon: f64, scale: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::config(format!(
                "final time T must be positive, got {horizon}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config(format!(
                "funnel scale c must be positive, got {scale}"
            )));
        }
        Ok(Self { horizon, scale })
    }

    /// Final time `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Scale `c`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, t: TimePoint) -> Result<f64> {
        t.check_in_horizon()?;
        Ok(1.0 / (self.scale * t.remaining))
    }

    /// Convenience for evaluation at elapsed time `t`.
    pub fn eval_at(&self, t: f64) -> Result<f64> {
        self.eval(TimePoint::at(t, self.horizon))
    }

    /// Funnel radius `c (T - t)`.
    pub fn radius(&self, t: TimePoint) -> f64 {
        self.scale * t.remaining
    }

    /// Scaled Taylor coefficients of `phi` at `t` up to `order`:
    /// coefficient `j` is `c^j phi(t)^{j+1}`, i.e. `phi^{(j)}(t) / j!`.
    pub fn jet(&self, t: TimePoint, order: usize) -> Result<Jet> {
        let phi = self.eval(t)?;
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut a = phi;
        for _ in 0..=order {
            coeffs.push(a);
            a *= self.scale * phi;
        }
        Ok(Jet::scalar(coeffs))
    }
}

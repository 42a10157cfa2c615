use std::f64::consts::FRAC_PI_2;

use crate::controller::ReferenceSample;
use crate::error::{Error, Result};
use crate::time::TimePoint;

/// Reference signal with bounded derivatives on `[0, T)`.
pub trait ReferenceTrajectory: Send + Sync {
    fn dim(&self) -> usize;
    /// Highest derivative order available.
    fn max_order(&self) -> usize;
    fn derivative(&self, t: TimePoint, order: usize) -> Result<Vec<f64>>;

    /// `y_ref, y_ref', ..., y_ref^{(count-1)}` at `t`.
    fn sample(&self, t: TimePoint, count: usize) -> Result<ReferenceSample> {
        if count > 0 && count - 1 > self.max_order() {
            return Err(Error::config(format!(
                "reference supplies derivatives up to order {}, {} requested",
                self.max_order(),
                count - 1
            )));
        }
        let derivatives = (0..count)
            .map(|i| self.derivative(t, i))
            .collect::<Result<_>>()?;
        Ok(ReferenceSample { derivatives })
    }
}

/// Docking reference `zeta_ref(t) = zeta_0 (1 - sin(pi t / (2T)))`, which
/// brings position and velocity to zero at `t = T`.
///
/// On the second half of the horizon the position is evaluated through the
/// remaining time as `2 sin^2(pi (T-t)/4T)`, which stays accurate near `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DockingReference {
    start: Vec<f64>,
    horizon: f64,
}

impl DockingReference {
    pub fn new(start: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::config("docking horizon must be positive"));
        }
        Ok(Self { start, horizon })
    }
}

impl ReferenceTrajectory for DockingReference {
    fn dim(&self) -> usize {
        self.start.len()
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn derivative(&self, t: TimePoint, order: usize) -> Result<Vec<f64>> {
        if !(t.elapsed >= 0.0 && t.remaining >= 0.0) {
            return Err(Error::domain(format!(
                "docking reference evaluated at t = {} outside [0, T]",
                t.elapsed
            )));
        }
        let k = FRAC_PI_2 / self.horizon;
        // theta = pi t / 2T = pi/2 - beta
        let beta = k * t.remaining;
        let factor = if order == 0 {
            if t.elapsed <= t.remaining {
                1.0 - (k * t.elapsed).sin()
            } else {
                2.0 * (0.5 * beta).sin().powi(2)
            }
        } else {
            // d^i/dt^i sin(theta) = k^i sin(theta + i pi/2)
            let trig = match order % 4 {
                0 => beta.cos(),
                1 => beta.sin(),
                2 => -beta.cos(),
                _ => -beta.sin(),
            };
            -k.powi(order as i32) * trig
        };
        Ok(self.start.iter().map(|z| z * factor).collect())
    }
}

/// `cw_reference`: order-`order` derivative of the docking reference.
pub fn docking_reference(start: &[f64], horizon: f64, t: f64, order: usize) -> Result<Vec<f64>> {
    if !(0.0..horizon).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [0, {horizon})")));
    }
    DockingReference::new(start.to_vec(), horizon)?.derivative(TimePoint::at(t, horizon), order)
}

/// Componentwise `offset + amplitude sin(frequency t + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinusoid {
    pub offset: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub frequency: Vec<f64>,
    pub phase: Vec<f64>,
}

impl Sinusoid {
    pub fn new(
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        phase: Vec<f64>,
    ) -> Result<Self> {
        let m = offset.len();
        if m == 0 || amplitude.len() != m || frequency.len() != m || phase.len() != m {
            return Err(Error::config(
                "sinusoid parameters must be non-empty and of equal length",
            ));
        }
        Ok(Self {
            offset,
            amplitude,
            frequency,
            phase,
        })
    }
}

impl ReferenceTrajectory for Sinusoid {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn derivative(&self, t: TimePoint, order: usize) -> Result<Vec<f64>> {
        Ok((0..self.dim())
            .map(|j| {
                let w = self.frequency[j];
                let arg = w * t.elapsed + self.phase[j] + order as f64 * FRAC_PI_2;
                let base = if order == 0 { self.offset[j] } else { 0.0 };
                base + self.amplitude[j] * w.powi(order as i32) * arg.sin()
            })
            .collect())
    }
}

/// Constant reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub value: Vec<f64>,
}

impl ReferenceTrajectory for Constant {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn derivative(&self, _t: TimePoint, order: usize) -> Result<Vec<f64>> {
        Ok(if order == 0 {
            self.value.clone()
        } else {
            vec![0.0; self.value.len()]
        })
    }
}

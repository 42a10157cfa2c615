use crate::error::{Error, Result};

/// Continuous surjection `N : [0, inf) -> R` applied to the top gain.
///
/// Both shapes swing with growing amplitude between arbitrarily large
/// positive and negative values, so the sign of the control direction does
/// not need to be known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchingFunction {
    /// `N(s) = -s cos(w s)`.
    Oscillating { frequency: f64 },
    /// `N(s) = s sin(w s)`.
    SineOscillating { frequency: f64 },
}

impl Default for SwitchingFunction {
    fn default() -> Self {
        SwitchingFunction::Oscillating { frequency: 1e-2 }
    }
}

impl SwitchingFunction {
    pub fn oscillating(frequency: f64) -> Result<Self> {
        Self::check_frequency(frequency)?;
        Ok(SwitchingFunction::Oscillating { frequency })
    }

    pub fn sine_oscillating(frequency: f64) -> Result<Self> {
        Self::check_frequency(frequency)?;
        Ok(SwitchingFunction::SineOscillating { frequency })
    }

    fn check_frequency(w: f64) -> Result<()> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::config(format!(
                "switching frequency must be positive, got {w}"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::domain(format!("switching argument {s} is negative")));
        }
        Ok(match *self {
            SwitchingFunction::Oscillating { frequency } => -s * (frequency * s).cos(),
            SwitchingFunction::SineOscillating { frequency } => s * (frequency * s).sin(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn examples() {
        let n = SwitchingFunction::default();
        assert_eq!(n.eval(0.0).unwrap(), 0.0);
        assert!((n.eval(100.0 * PI).unwrap() - 100.0 * PI).abs() < 1e-10);
        assert!(n.eval(50.0 * PI).unwrap().abs() < 1e-10);
        assert!(matches!(n.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn attains_large_values_of_both_signs() {
        for n in [
            SwitchingFunction::default(),
            SwitchingFunction::sine_oscillating(0.05).unwrap(),
        ] {
            let w = match n {
                SwitchingFunction::Oscillating { frequency } => frequency,
                SwitchingFunction::SineOscillating { frequency } => frequency,
            };
            for bound in [1.0, 1e2, 1e4, 1e6] {
                // past 2*bound, |N| > bound wherever the trig factor exceeds 1/2
                let search_to = 2.0 * bound + 2.0 * 2.0 * PI / w;
                let steps = 200_000;
                let samples = (0..=steps).map(|i| search_to * i as f64 / steps as f64);
                let (mut hi, mut lo) = (f64::MIN, f64::MAX);
                for s in samples {
                    let v = n.eval(s).unwrap();
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
                assert!(
                    hi > bound && lo < -bound,
                    "{n:?} bound {bound}: [{lo}, {hi}]"
                );
            }
        }
    }
}

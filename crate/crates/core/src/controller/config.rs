use crate::error::{Error, Result};
use crate::signals::{FunnelFunction, GainFunction, GainShape, SwitchingFunction};

/// Design parameters of the funnel controller.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    r: usize,
    m: usize,
    funnel: FunnelFunction,
    gain: GainFunction,
    switching: SwitchingFunction,
}

impl ControllerConfig {
    pub fn new(
        r: usize,
        m: usize,
        funnel: FunnelFunction,
        gain: GainFunction,
        switching: SwitchingFunction,
    ) -> Result<Self> {
        if r == 0 || m == 0 {
            return Err(Error::config(format!(
                "relative degree and dimension must be >= 1 (r = {r}, m = {m})"
            )));
        }
        let floor = funnel.scale() * (r as f64 + 1.0);
        if (gain.lower_bound() - floor).abs() > 1e-12 * floor {
            return Err(Error::config(format!(
                "gain lower bound {} does not equal c(r+1) = {floor}",
                gain.lower_bound()
            )));
        }
        if gain.max_order() < r - 1 {
            return Err(Error::config(format!(
                "gain supplies derivatives up to order {}, relative degree {r} needs {}",
                gain.max_order(),
                r - 1
            )));
        }
        Ok(Self {
            r,
            m,
            funnel,
            gain,
            switching,
        })
    }

    /// Default design: `alpha(s) = c(r+1)/(1-s)` and `N(s) = -s cos(s/100)`.
    pub fn standard(r: usize, m: usize, horizon: f64, c: f64) -> Result<Self> {
        Self::new(
            r,
            m,
            FunnelFunction::new(horizon, c)?,
            GainFunction::reciprocal(c, r),
            SwitchingFunction::default(),
        )
    }

    pub fn relative_degree(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn funnel(&self) -> &FunnelFunction {
        &self.funnel
    }

    pub fn gain(&self) -> &GainFunction {
        &self.gain
    }

    pub fn switching(&self) -> &SwitchingFunction {
        &self.switching
    }

    pub fn horizon(&self) -> f64 {
        self.funnel.horizon()
    }

    pub fn scale(&self) -> f64 {
        self.funnel.scale()
    }

    /// Same design with funnel scale `c`; the gain floor follows `c(r+1)`.
    pub fn with_scale(&self, c: f64) -> Result<Self> {
        let gain = match self.gain.shape() {
            GainShape::Reciprocal => GainFunction::reciprocal(c, self.r),
            GainShape::Power { exponent } => GainFunction::power(c, self.r, *exponent)?,
            GainShape::Custom(_) => {
                return Err(Error::config("cannot rescale a custom gain function"));
            }
        };
        Self::new(
            self.r,
            self.m,
            FunnelFunction::new(self.horizon(), c)?,
            gain,
            self.switching,
        )
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(
            self.r,
            self.m,
            FunnelFunction::new(horizon, self.scale())?,
            self.gain.clone(),
            self.switching,
        )
    }
}

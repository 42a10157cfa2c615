use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::signals::Jet;

/// User-supplied gain shape. Implementations must be a continuous, strictly
/// increasing bijection `[0, 1) -> [alpha(0), inf)` and supply derivatives up
/// to [`max_order`](GainDerivatives::max_order).
pub trait GainDerivatives: Send + Sync {
    /// `alpha(s), alpha'(s), ..., alpha^{(order)}(s)` for `s` in `[0, 1)`.
    fn derivatives(&self, s: f64, order: usize) -> Vec<f64>;
    fn max_order(&self) -> usize;
}

#[derive(Clone)]
pub enum GainShape {
    /// `alpha(s) = a / (1 - s)`.
    Reciprocal,
    /// `alpha(s) = a / (1 - s)^p` with `p > 0`.
    Power {
        exponent: f64,
    },
    Custom(Arc<dyn GainDerivatives>),
}

impl fmt::Debug for GainShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainShape::Reciprocal => write!(f, "Reciprocal"),
            GainShape::Power { exponent } => write!(f, "Power {{ exponent: {exponent} }}"),
            GainShape::Custom(g) => write!(f, "Custom {{ max_order: {} }}", g.max_order()),
        }
    }
}

/// Gain function `alpha : [0, 1) -> [c(r+1), inf)`, applied to `|e_k|^2`.
#[derive(Debug, Clone)]
pub struct GainFunction {
    floor: f64,
    shape: GainShape,
}

impl GainFunction {
    /// Default gain `alpha(s) = c (r + 1) / (1 - s)`.
    pub fn reciprocal(c: f64, r: usize) -> Self {
        Self {
            floor: c * (r as f64 + 1.0),
            shape: GainShape::Reciprocal,
        }
    }

    pub fn power(c: f64, r: usize, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::config(format!(
                "gain exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self {
            floor: c * (r as f64 + 1.0),
            shape: GainShape::Power { exponent },
        })
    }

    /// Wraps a user-supplied shape. Its value at 0 becomes the floor.
    pub fn custom(shape: Arc<dyn GainDerivatives>) -> Self {
        let floor = shape.derivatives(0.0, 0)[0];
        Self {
            floor,
            shape: GainShape::Custom(shape),
        }
    }

    /// `alpha(0)`, the smallest gain value.
    pub fn lower_bound(&self) -> f64 {
        self.floor
    }

    pub fn shape(&self) -> &GainShape {
        &self.shape
    }

    /// Highest derivative order this gain can supply.
    pub fn max_order(&self) -> usize {
        match &self.shape {
            GainShape::Custom(g) => g.max_order(),
            _ => usize::MAX,
        }
    }

    fn check_arg(s: f64) -> Result<()> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::domain(format!("gain argument {s} outside [0, 1)")));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok(self.derivatives(s, 0)?[0])
    }

    /// `alpha(s), alpha'(s), ..., alpha^{(order)}(s)`.
    pub fn derivatives(&self, s: f64, order: usize) -> Result<Vec<f64>> {
        Self::check_arg(s)?;
        let q = 1.0 - s;
        match &self.shape {
            GainShape::Reciprocal => {
                // alpha^{(j)} = a j! / (1 - s)^{j+1}
                let mut out = Vec::with_capacity(order + 1);
                let mut d = self.floor / q;
                for j in 0..=order {
                    out.push(d);
                    d *= (j + 1) as f64 / q;
                }
                Ok(out)
            }
            GainShape::Power { exponent } => {
                // alpha^{(j)} = a p (p+1) ... (p+j-1) / (1 - s)^{p+j}
                let mut out = Vec::with_capacity(order + 1);
                let mut d = self.floor / q.powf(*exponent);
                for j in 0..=order {
                    out.push(d);
                    d *= (exponent + j as f64) / q;
                }
                Ok(out)
            }
            GainShape::Custom(g) => {
                if order > g.max_order() {
                    return Err(Error::config(format!(
                        "custom gain supplies derivatives up to order {}, {} requested",
                        g.max_order(),
                        order
                    )));
                }
                Ok(g.derivatives(s, order))
            }
        }
    }

    /// Jet of `alpha(s(t))` from the jet of `s`.
    pub fn jet(&self, s: &Jet) -> Result<Jet> {
        let derivs = self.derivatives(s.scalar_value(), s.order())?;
        s.compose(&derivs)
    }
}

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::systems::operator::{Delay, Fading, Memoryless, Operator, Trajectory};

/// Right-hand side `f(d, w, u)` of `y^{(r)} = f(d(t), T(x)(t), u(t))`.
pub type Nonlinearity = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

type Signal = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Bounded disturbance `d : [0, inf) -> R^p`.
#[derive(Clone)]
pub struct Disturbance {
    dim: usize,
    bound: f64,
    signal: Signal,
}

impl Disturbance {
    pub fn new(
        dim: usize,
        bound: f64,
        signal: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            bound,
            signal: Arc::new(signal),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, 0.0, move |_| vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Declared bound on `|d(t)|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        (self.signal)(t)
    }
}

/// Initial trajectory of `x = (y, ..., y^{(r-1)})` on `[-sigma, 0]`.
#[derive(Clone)]
pub enum InitialHistory {
    /// Constant extension of the state at `t = 0`.
    Constant(Vec<f64>),
    Custom {
        dim: usize,
        signal: Signal,
    },
}

impl InitialHistory {
    pub fn at(&self, s: f64) -> Vec<f64> {
        match self {
            InitialHistory::Constant(x0) => x0.clone(),
            InitialHistory::Custom { signal, .. } => signal(s),
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.at(0.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialHistory::Constant(x0) => x0.len(),
            InitialHistory::Custom { dim, .. } => *dim,
        }
    }

    pub(crate) fn as_signal(&self) -> Signal {
        match self {
            InitialHistory::Constant(x0) => {
                let x0 = x0.clone();
                Arc::new(move |_| x0.clone())
            }
            InitialHistory::Custom { signal, .. } => signal.clone(),
        }
    }
}

/// A system `y^{(r)} = f(d(t), T(y, ..., y^{(r-1)})(t), u(t))` with
/// `m` inputs and outputs.
///
/// Membership in the admissible system class (in particular the high-gain
/// property of `f`) is asserted by whoever builds the model; it is not
/// checked here.
pub struct SystemModel {
    name: String,
    r: usize,
    m: usize,
    f: Nonlinearity,
    disturbance: Disturbance,
    operator: Box<dyn Operator>,
    history: InitialHistory,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("r", &self.r)
            .field("m", &self.m)
            .field("sigma", &self.operator.memory())
            .finish()
    }
}

impl SystemModel {
    pub fn new(
        name: impl Into<String>,
        r: usize,
        m: usize,
        f: Nonlinearity,
        disturbance: Disturbance,
        operator: Box<dyn Operator>,
        history: InitialHistory,
    ) -> Result<Self> {
        if r == 0 || m == 0 {
            return Err(Error::config("system needs r >= 1 and m >= 1"));
        }
        if operator.input_dim() != r * m {
            return Err(Error::DimensionMismatch {
                expected: r * m,
                got: operator.input_dim(),
            });
        }
        if history.dim() != r * m {
            return Err(Error::DimensionMismatch {
                expected: r * m,
                got: history.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            r,
            m,
            f,
            disturbance,
            operator,
            history,
        })
    }

    /// Replaces the initial history on `[-sigma, 0]`.
    pub fn with_history(mut self, history: InitialHistory) -> Result<Self> {
        if history.dim() != self.r * self.m {
            return Err(Error::DimensionMismatch {
                expected: self.r * self.m,
                got: history.dim(),
            });
        }
        self.history = history;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn relative_degree(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Memory length of the operator.
    pub fn sigma(&self) -> f64 {
        self.operator.memory()
    }

    pub fn history(&self) -> &InitialHistory {
        &self.history
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.history.initial_state()
    }

    pub fn operator(&self) -> &dyn Operator {
        self.operator.as_ref()
    }

    pub fn operator_mut(&mut self) -> &mut dyn Operator {
        self.operator.as_mut()
    }

    pub fn disturbance(&self) -> &Disturbance {
        &self.disturbance
    }

    /// Samples `|d(t)|` on `[0, horizon]` and compares against the declared bound.
    pub fn disturbance_within_bound(&self, horizon: f64, samples: usize) -> bool {
        (0..=samples).all(|i| {
            let t = horizon * i as f64 / samples as f64;
            crate::linalg::norm(&self.disturbance.at(t)) <= self.disturbance.bound() * (1.0 + 1e-12)
        })
    }

    /// Stacked vector field `x' = (x_2, ..., x_r, f(d(t), T(x)(t), u))`.
    pub fn vector_field(
        &self,
        t: f64,
        x: &[f64],
        trajectory: &dyn Trajectory,
        u: &[f64],
    ) -> Result<Vec<f64>> {
        let n = self.r * self.m;
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if u.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: u.len(),
            });
        }
        let w = self.operator.evaluate(t, trajectory)?;
        let d = self.disturbance.at(t);
        let top = (self.f)(&d, &w, u);
        if top.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: top.len(),
            });
        }
        let mut dx = Vec::with_capacity(n);
        dx.extend_from_slice(&x[self.m..]);
        dx.extend_from_slice(&top);
        Ok(dx)
    }

    /// `y^{(r)} = u` with `m` channels.
    pub fn chain_integrator(r: usize, m: usize, x0: Vec<f64>) -> Result<Self> {
        Self::new(
            format!("chain_integrator_r{r}_m{m}"),
            r,
            m,
            Arc::new(|_, _, u| u.to_vec()),
            Disturbance::zero(1),
            Box::new(Memoryless::identity(r * m)),
            InitialHistory::Constant(x0),
        )
    }

    /// `y' = a y(t - tau) + b sin(t) + u`.
    pub fn delayed_scalar(a: f64, tau: f64, disturbance_amplitude: f64, y0: f64) -> Result<Self> {
        let b = disturbance_amplitude;
        Self::new(
            "delay_rd1",
            1,
            1,
            Arc::new(move |d, w, u| vec![a * w[0] + d[0] + u[0]]),
            Disturbance::new(1, b.abs(), move |t| vec![b * t.sin()]),
            Box::new(Delay::new(1, tau)?),
            InitialHistory::Constant(vec![y0]),
        )
    }

    /// `y' = a int_0^t exp(-lambda (t - s)) y(s) ds + u`.
    pub fn fading_scalar(a: f64, lambda: f64, y0: f64) -> Result<Self> {
        Self::new(
            "fading_rd1",
            1,
            1,
            Arc::new(move |_, w, u| vec![a * w[0] + u[0]]),
            Disturbance::zero(1),
            Box::new(Fading::new(1, lambda)?),
            InitialHistory::Constant(vec![y0]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::operator::FnTrajectory;

    #[test]
    fn pure_integrator_field() {
        let model = SystemModel::chain_integrator(1, 1, vec![0.0]).unwrap();
        let x = FnTrajectory::new(1, |_| vec![0.0]);
        assert_eq!(
            model.vector_field(0.0, &[0.0], &x, &[2.5]).unwrap(),
            vec![2.5]
        );
    }

    #[test]
    fn chain_of_three() {
        let model = SystemModel::chain_integrator(3, 1, vec![0.0; 3]).unwrap();
        let state = [1.0, 2.0, 3.0];
        let x = FnTrajectory::new(3, move |_| state.to_vec());
        assert_eq!(
            model.vector_field(0.0, &state, &x, &[-4.0]).unwrap(),
            vec![2.0, 3.0, -4.0]
        );
    }

    #[test]
    fn dimension_checks() {
        let model = SystemModel::chain_integrator(2, 2, vec![0.0; 4]).unwrap();
        let x = FnTrajectory::new(4, |_| vec![0.0; 4]);
        assert!(model.vector_field(0.0, &[0.0; 3], &x, &[0.0; 2]).is_err());
        assert!(model.vector_field(0.0, &[0.0; 4], &x, &[0.0; 3]).is_err());
        assert!(SystemModel::chain_integrator(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn delayed_scalar_reads_the_past() {
        let model = SystemModel::delayed_scalar(2.0, 1.0, 0.0, 0.0).unwrap();
        let x = FnTrajectory::new(1, |s| vec![s]);
        // w = x(t - 1) = 2, f = 2 * 2 + 0 + u
        assert_eq!(
            model.vector_field(3.0, &[3.0], &x, &[1.0]).unwrap(),
            vec![5.0]
        );
        assert!(model.disturbance_within_bound(10.0, 100));
        assert_eq!(model.sigma(), 1.0);
    }
}

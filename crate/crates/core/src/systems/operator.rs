//! Causal operators with finite memory acting on the stacked output
//! trajectory `x = (y, y', ..., y^{(r-1)})`.
//!
//! Instances must map bounded trajectories to bounded trajectories and be
//! causal: the output at `t` may only depend on `x` on `[-sigma, t]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A continuous trajectory that can be sampled at any recorded instant.
pub trait Trajectory {
    fn dim(&self) -> usize;
    fn state_at(&self, s: f64) -> Result<Vec<f64>>;
}

/// Any closure `s -> x(s)` defined on the whole real line is a trajectory.
pub struct FnTrajectory<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> Vec<f64>> FnTrajectory<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> Vec<f64>> Trajectory for FnTrajectory<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn state_at(&self, s: f64) -> Result<Vec<f64>> {
        Ok((self.f)(s))
    }
}

pub trait Operator: Send {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Memory length `sigma >= 0`.
    fn memory(&self) -> f64;

    /// Output at time `t >= 0`. `x` must be known on `[-sigma, t]`.
    fn evaluate(&self, t: f64, x: &dyn Trajectory) -> Result<Vec<f64>>;

    /// Declared output bound for inputs bounded by `input_bound`, if known.
    fn declared_bound(&self, input_bound: f64) -> Option<f64>;

    /// Largest step an integrator may take so that every lookup stays in
    /// the committed history.
    fn max_step(&self) -> Option<f64> {
        None
    }

    /// Called after the integrator commits the step `[t0, t1]` to `history`.
    fn on_accept(&mut self, _t0: f64, _t1: f64, _history: &dyn Trajectory) -> Result<()> {
        Ok(())
    }

    /// Drops cached state from a previous run.
    fn reset(&mut self) {}
}

type StateMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `T(x)(t) = g(x(t))`.
#[derive(Clone)]
pub struct Memoryless {
    input_dim: usize,
    output_dim: usize,
    map: StateMap,
    /// `|g(v)| <= growth * |v|`, when declared.
    growth: Option<f64>,
}

impl fmt::Debug for Memoryless {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Memoryless")
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .field("growth", &self.growth)
            .finish()
    }
}

impl Memoryless {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        growth: Option<f64>,
    ) -> Self {
        Self {
            input_dim,
            output_dim,
            map: Arc::new(map),
            growth,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, |x| x.to_vec(), Some(1.0))
    }

    /// `g(v) = A v` with `A` given row by row.
    pub fn linear(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map(Vec::len).unwrap_or(0);
        if rows == 0 || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::config(
                "linear operator needs a non-empty rectangular matrix",
            ));
        }
        let frobenius = matrix.iter().flatten().map(|a| a * a).sum::<f64>().sqrt();
        Ok(Self::new(
            cols,
            rows,
            move |x| {
                matrix
                    .iter()
                    .map(|row| crate::linalg::dot(row, x))
                    .collect()
            },
            Some(frobenius),
        ))
    }
}

impl Operator for Memoryless {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn memory(&self) -> f64 {
        0.0
    }

    fn evaluate(&self, t: f64, x: &dyn Trajectory) -> Result<Vec<f64>> {
        Ok((self.map)(&x.state_at(t)?))
    }

    fn declared_bound(&self, input_bound: f64) -> Option<f64> {
        self.growth.map(|g| g * input_bound)
    }
}

/// `T(x)(t) = x(t - tau)`.
#[derive(Debug, Clone)]
pub struct Delay {
    dim: usize,
    tau: f64,
}

impl Delay {
    pub fn new(dim: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::config(format!("delay must be positive, got {tau}")));
        }
        Ok(Self { dim, tau })
    }

    pub fn delay(&self) -> f64 {
        self.tau
    }
}

impl Operator for Delay {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn memory(&self) -> f64 {
        self.tau
    }

    fn evaluate(&self, t: f64, x: &dyn Trajectory) -> Result<Vec<f64>> {
        x.state_at(t - self.tau)
    }

    fn declared_bound(&self, input_bound: f64) -> Option<f64> {
        Some(input_bound)
    }

    fn max_step(&self) -> Option<f64> {
        Some(self.tau)
    }
}

// 5-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Fading memory `T(x)(t) = int_0^t exp(-lambda (t - s)) x(s) ds`.
///
/// The integral up to the last committed step is cached and advanced by
/// `I(t1) = exp(-lambda (t1 - t0)) I(t0) + int_{t0}^{t1} ...`; only the part
/// after the cache is integrated on each evaluation.
#[derive(Debug, Clone)]
pub struct Fading {
    dim: usize,
    lambda: f64,
    cache: Option<(f64, Vec<f64>)>,
}

impl Fading {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!(
                "fading rate must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            dim,
            lambda,
            cache: None,
        })
    }

    /// `int_a^b exp(-lambda (b - s)) x(s) ds`.
    fn window(&self, a: f64, b: f64, x: &dyn Trajectory) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.dim];
        if b <= a {
            return Ok(acc);
        }
        let pieces = ((b - a) * self.lambda / 0.25).ceil().max(1.0) as usize;
        let width = (b - a) / pieces as f64;
        for p in 0..pieces {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let s = mid + 0.5 * width * node;
                let w = 0.5 * width * weight * (-self.lambda * (b - s)).exp();
                crate::linalg::axpy(&mut acc, w, &x.state_at(s)?);
            }
        }
        Ok(acc)
    }
}

impl Operator for Fading {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn memory(&self) -> f64 {
        0.0
    }

    fn evaluate(&self, t: f64, x: &dyn Trajectory) -> Result<Vec<f64>> {
        match &self.cache {
            Some((tc, ic)) if *tc <= t => {
                let mut out = self.window(*tc, t, x)?;
                crate::linalg::axpy(&mut out, (-self.lambda * (t - tc)).exp(), ic);
                Ok(out)
            }
            _ => self.window(0.0, t.max(0.0), x),
        }
    }

    fn declared_bound(&self, input_bound: f64) -> Option<f64> {
        Some(input_bound / self.lambda)
    }

    fn on_accept(&mut self, t0: f64, t1: f64, history: &dyn Trajectory) -> Result<()> {
        let (tc, ic) = match self.cache.take() {
            Some((tc, ic)) if tc == t0 => (tc, ic),
            _ => (0.0, self.window(0.0, t0, history)?),
        };
        let mut next = self.window(tc, t1, history)?;
        crate::linalg::axpy(&mut next, (-self.lambda * (t1 - tc)).exp(), &ic);
        self.cache = Some((t1, next));
        Ok(())
    }

    fn reset(&mut self) {
        self.cache = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn memoryless_identity_on_constant() {
        let op = Memoryless::identity(2);
        let x = FnTrajectory::new(2, |_| vec![1.5, -2.0]);
        for t in [0.0, 1.0, 10.0] {
            assert_eq!(op.evaluate(t, &x).unwrap(), vec![1.5, -2.0]);
        }
    }

    #[test]
    fn delay_with_constant_prehistory() {
        let op = Delay::new(1, 0.5).unwrap();
        let h0 = 3.0;
        let x = FnTrajectory::new(1, move |s| vec![if s < 0.0 { h0 } else { s }]);
        assert_eq!(op.evaluate(0.2, &x).unwrap(), vec![h0]);
        assert_eq!(op.evaluate(2.0, &x).unwrap(), vec![1.5]);
        assert_eq!(op.max_step(), Some(0.5));
    }

    #[test]
    fn fading_on_constant_input() {
        let lambda = 0.7;
        let op = Fading::new(1, lambda).unwrap();
        let x = FnTrajectory::new(1, |_| vec![1.0]);
        for t in [0.0, 0.3, 2.0, 25.0] {
            let want = (1.0 - (-lambda * t).exp()) / lambda;
            assert_relative_eq!(op.evaluate(t, &x).unwrap()[0], want, epsilon = 1e-13);
        }
    }

    #[test]
    fn fading_cache_matches_direct_integration() {
        let x = FnTrajectory::new(1, |s: f64| vec![(2.0 * s).sin() + s * s * 0.1]);
        let mut cached = Fading::new(1, 1.3).unwrap();
        let direct = Fading::new(1, 1.3).unwrap();
        let mut t = 0.0;
        for _ in 0..40 {
            cached.on_accept(t, t + 0.1, &x).unwrap();
            t += 0.1;
        }
        let probe = t + 0.05;
        let a = cached.evaluate(probe, &x).unwrap()[0];
        let b = direct.evaluate(probe, &x).unwrap()[0];
        assert_relative_eq!(a, b, max_relative = 1e-11);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Delay::new(1, 0.0).is_err());
        assert!(Fading::new(1, -1.0).is_err());
        assert!(Memoryless::linear(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}

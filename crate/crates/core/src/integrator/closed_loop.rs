use crate::controller::{control, error_derivatives, CascadeState, ControllerConfig};
use crate::error::{Error, Result};
use crate::integrator::solver::{
    lookup, solve, DenseStep, Dynamics, SolveFailure, SolverConfig, SolverStats,
};
use crate::systems::{ReferenceTrajectory, SystemModel, Trajectory};
use crate::time::TimePoint;

/// One accepted point of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: TimePoint,
    /// `(y, y', ..., y^{(r-1)})`.
    pub state: Vec<f64>,
    /// `e, e', ..., e^{(r-1)}`.
    pub errors: Vec<Vec<f64>>,
    pub cascade: CascadeState,
}

impl TraceRecord {
    pub fn input(&self) -> &[f64] {
        &self.cascade.input
    }

    /// `1 / phi(t)`: the admissible error radius.
    pub fn funnel_boundary(&self) -> f64 {
        1.0 / self.cascade.phi
    }

    /// `1 - phi(t) |e(t)|`.
    pub fn margin(&self) -> f64 {
        self.cascade.funnel_margin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Dense output of every accepted step.
    pub steps: Vec<DenseStep>,
    pub r: usize,
    pub m: usize,
    pub horizon: f64,
    pub scale: f64,
    /// `T - t_max = eps / c`.
    pub stop_remaining: f64,
    pub stats: SolverStats,
}

impl Trace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Whether the run reached `t_max`.
    pub fn is_complete(&self) -> bool {
        self.last()
            .is_some_and(|r| r.time.remaining == self.stop_remaining)
    }
}

/// Interpolated state at `s` on the recorded span.
pub fn dense_eval(trace: &Trace, s: f64) -> Result<Vec<f64>> {
    let x0 = trace
        .records
        .first()
        .ok_or_else(|| Error::domain("empty trace"))?;
    if s < 0.0 {
        return Err(Error::HistoryUnderrun {
            requested: s,
            start: 0.0,
            end: trace.steps.last().map_or(0.0, |st| st.t1),
        });
    }
    lookup(&trace.steps, &x0.state, None, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationFailure {
    pub error: Error,
    pub partial: Trace,
}

impl std::fmt::Display for SimulationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} accepted steps)",
            self.error, self.partial.stats.accepted
        )
    }
}

impl std::error::Error for SimulationFailure {}

type Diag = (Vec<Vec<f64>>, CascadeState);

struct ClosedLoop<'a> {
    model: &'a mut SystemModel,
    cfg: &'a ControllerConfig,
    reference: &'a dyn ReferenceTrajectory,
}

impl Dynamics for ClosedLoop<'_> {
    type Diag = Diag;

    fn dim(&self) -> usize {
        self.model.relative_degree() * self.model.dim()
    }

    fn eval(&self, t: TimePoint, x: &[f64], past: &dyn Trajectory) -> Result<(Vec<f64>, Diag)> {
        let r = self.cfg.relative_degree();
        let sample = self.reference.sample(t, r)?;
        let (u, cascade) = control(self.cfg, t, x, &sample)?;
        let errors = error_derivatives(x, r, self.cfg.dim(), &sample)?;
        let dx = self.model.vector_field(t.elapsed, x, past, &u)?;
        Ok((dx, (errors.as_slices().to_vec(), cascade)))
    }

    fn margin(&self, diag: &Diag) -> f64 {
        diag.1.min_margin()
    }

    fn max_step(&self) -> Option<f64> {
        self.model.operator().max_step()
    }

    fn on_accept(&mut self, t0: f64, t1: f64, history: &dyn Trajectory) -> Result<()> {
        self.model.operator_mut().on_accept(t0, t1, history)
    }
}

fn check_compatible(
    model: &SystemModel,
    cfg: &ControllerConfig,
    reference: &dyn ReferenceTrajectory,
) -> Result<()> {
    if model.relative_degree() != cfg.relative_degree() {
        return Err(Error::config(format!(
            "system has relative degree {}, controller {}",
            model.relative_degree(),
            cfg.relative_degree()
        )));
    }
    if model.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: cfg.dim(),
        });
    }
    if reference.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: reference.dim(),
        });
    }
    if reference.max_order().saturating_add(1) < cfg.relative_degree() {
        return Err(Error::config(format!(
            "reference needs derivatives up to order {}",
            cfg.relative_degree() - 1
        )));
    }
    Ok(())
}

/// Runs the closed loop from `t = 0` to `t_max = T - eps / c`.
// The partial trace is the useful part of a failure.
#[allow(clippy::result_large_err)]
pub fn simulate(
    model: &mut SystemModel,
    cfg: &ControllerConfig,
    reference: &dyn ReferenceTrajectory,
    solver: &SolverConfig,
) -> Result<Trace, SimulationFailure> {
    let horizon = cfg.horizon();
    let scale = cfg.scale();
    let stop_remaining = solver.eps / scale;
    let empty = |error: Error| SimulationFailure {
        error,
        partial: Trace {
            records: Vec::new(),
            steps: Vec::new(),
            r: cfg.relative_degree(),
            m: cfg.dim(),
            horizon,
            scale,
            stop_remaining,
            stats: SolverStats::default(),
        },
    };
    check_compatible(model, cfg, reference).map_err(empty)?;
    if !(stop_remaining < horizon) {
        return Err(empty(Error::config(format!(
            "eps / c = {stop_remaining} is not below T = {horizon}"
        ))));
    }
    model.operator_mut().reset();
    let x0 = model.initial_state();
    let initial = Some(model.history().as_signal());
    let mut sys = ClosedLoop {
        model,
        cfg,
        reference,
    };
    let wrap = |sol: crate::integrator::solver::Solution<Diag>| Trace {
        records: sol
            .records
            .into_iter()
            .map(|rec| TraceRecord {
                time: rec.time,
                state: rec.state,
                errors: rec.diag.0,
                cascade: rec.diag.1,
            })
            .collect(),
        steps: sol.steps,
        r: cfg.relative_degree(),
        m: cfg.dim(),
        horizon,
        scale,
        stop_remaining,
        stats: sol.stats,
    };
    match solve(&mut sys, x0, initial, horizon, stop_remaining, solver) {
        Ok(sol) => Ok(wrap(sol)),
        Err(SolveFailure { error, partial }) => Err(SimulationFailure {
            error,
            partial: wrap(partial),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Constant;

    #[test]
    fn zero_fixed_point() {
        let mut model = SystemModel::chain_integrator(1, 1, vec![0.0]).unwrap();
        let cfg = ControllerConfig::standard(1, 1, 10.0, 1.0).unwrap();
        let reference = Constant { value: vec![0.0] };
        let trace = simulate(&mut model, &cfg, &reference, &SolverConfig::default()).unwrap();
        assert!(trace.is_complete());
        for rec in &trace.records {
            assert_eq!(rec.state, vec![0.0]);
            assert_eq!(rec.input(), &[0.0]);
            assert_eq!(rec.margin(), 1.0);
        }
        assert_eq!(dense_eval(&trace, 5.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn mismatched_reference_is_rejected() {
        let mut model = SystemModel::chain_integrator(1, 1, vec![0.0]).unwrap();
        let cfg = ControllerConfig::standard(1, 1, 10.0, 1.0).unwrap();
        let reference = Constant {
            value: vec![0.0, 0.0],
        };
        let err = simulate(&mut model, &cfg, &reference, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err.error, Error::DimensionMismatch { .. }));
    }
}

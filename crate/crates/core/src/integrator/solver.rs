use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::axpy;
use crate::systems::Trajectory;
use crate::time::TimePoint;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Final accuracy: integration stops at `T - eps / c`.
    pub eps: f64,
    /// Step multiplier applied while the funnel margin is below `margin_threshold`.
    pub margin_factor: f64,
    pub margin_threshold: f64,
    /// Constant step size without error control, for debugging.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            h_init: 1e-3,
            h_min: 1e-16,
            h_max: 10.0,
            eps: 1e-6,
            margin_factor: 0.5,
            margin_threshold: 0.05,
            fixed_step: None,
            max_steps: 200_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::config("tolerances must be positive"));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(Error::config(
                "step sizes must satisfy 0 < h_min <= h_init <= h_max",
            ));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("eps must be positive"));
        }
        if !(self.margin_factor > 0.0 && self.margin_factor < 1.0) {
            return Err(Error::config("margin_factor must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.margin_threshold) {
            return Err(Error::config("margin_threshold must lie in [0, 1)"));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config("fixed step must be positive"));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be positive"));
        }
        Ok(())
    }
}

/// Right-hand side `x' = F(t, x, x|_{[-sigma, t]})` with per-point diagnostics.
pub trait Dynamics {
    type Diag: Clone;

    fn dim(&self) -> usize;

    fn eval(
        &self,
        t: TimePoint,
        x: &[f64],
        past: &dyn Trajectory,
    ) -> Result<(Vec<f64>, Self::Diag)>;

    /// Distance to the feasibility boundary; small values shrink the step.
    fn margin(&self, _diag: &Self::Diag) -> f64 {
        f64::INFINITY
    }

    fn max_step(&self) -> Option<f64> {
        None
    }

    fn on_accept(&mut self, _t0: f64, _t1: f64, _history: &dyn Trajectory) -> Result<()> {
        Ok(())
    }
}

/// Plain ODE `x' = f(t, x)`.
pub struct OdeFn<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(TimePoint, &[f64]) -> Vec<f64>> OdeFn<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(TimePoint, &[f64]) -> Vec<f64>> Dynamics for OdeFn<F> {
    type Diag = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: TimePoint, x: &[f64], _past: &dyn Trajectory) -> Result<(Vec<f64>, ())> {
        Ok(((self.f)(t, x), ()))
    }
}

/// One accepted step with the data for cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub t1: f64,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
}

impl DenseStep {
    pub fn eval(&self, s: f64) -> Vec<f64> {
        if s == self.t0 {
            return self.x0.clone();
        }
        if s == self.t1 {
            return self.x1.clone();
        }
        let h = self.t1 - self.t0;
        let th = (s - self.t0) / h;
        let th2 = th * th;
        let th3 = th2 * th;
        let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        (0..self.x0.len())
            .map(|i| {
                h00 * self.x0[i] + h * h10 * self.f0[i] + h01 * self.x1[i] + h * h11 * self.f1[i]
            })
            .collect()
    }
}

type InitialSignal = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Accepted steps plus the initial history on `s < 0`.
pub struct History {
    x0: Vec<f64>,
    initial: Option<InitialSignal>,
    steps: Vec<DenseStep>,
}

impl History {
    pub fn new(x0: Vec<f64>, initial: Option<InitialSignal>) -> Self {
        Self {
            x0,
            initial,
            steps: Vec::new(),
        }
    }

    pub fn steps(&self) -> &[DenseStep] {
        &self.steps
    }

    pub fn end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t1)
    }

    fn push(&mut self, step: DenseStep) {
        self.steps.push(step);
    }

    fn into_steps(self) -> Vec<DenseStep> {
        self.steps
    }
}

/// Interpolated state at `s` from accepted steps; `s < 0` reads `initial`.
pub(crate) fn lookup(
    steps: &[DenseStep],
    x0: &[f64],
    initial: Option<&InitialSignal>,
    s: f64,
) -> Result<Vec<f64>> {
    let end = steps.last().map_or(0.0, |st| st.t1);
    if s < 0.0 {
        return match initial {
            Some(f) => Ok(f(s)),
            None => Err(Error::HistoryUnderrun {
                requested: s,
                start: 0.0,
                end,
            }),
        };
    }
    if s == 0.0 {
        return Ok(x0.to_vec());
    }
    if !(s <= end) {
        return Err(Error::HistoryUnderrun {
            requested: s,
            start: 0.0,
            end,
        });
    }
    let idx = steps.partition_point(|st| st.t1 < s);
    Ok(steps[idx].eval(s))
}

impl Trajectory for History {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn state_at(&self, s: f64) -> Result<Vec<f64>> {
        lookup(&self.steps, &self.x0, self.initial.as_ref(), s)
    }
}

/// History extended into the step being attempted: between the last
/// accepted point and a stage point the state is interpolated linearly.
struct StageView<'a> {
    history: &'a History,
    t0: f64,
    x0: &'a [f64],
    t: f64,
    x: &'a [f64],
}

impl Trajectory for StageView<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn state_at(&self, s: f64) -> Result<Vec<f64>> {
        if s == self.t {
            return Ok(self.x.to_vec());
        }
        if s > self.t0 && s < self.t {
            let w = (s - self.t0) / (self.t - self.t0);
            return Ok(self
                .x0
                .iter()
                .zip(self.x)
                .map(|(a, b)| a + w * (b - a))
                .collect());
        }
        self.history.state_at(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record<D> {
    pub time: TimePoint,
    pub state: Vec<f64>,
    pub diag: D,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Rejections caused by a stage leaving the feasible set.
    pub violations: usize,
    pub evaluations: usize,
    pub min_step: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<D> {
    pub records: Vec<Record<D>>,
    pub steps: Vec<DenseStep>,
    pub stats: SolverStats,
    pub horizon: f64,
    pub stop_remaining: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveFailure<D> {
    pub error: Error,
    /// Everything accepted before the failure.
    pub partial: Solution<D>,
}

// Dormand-Prince 5(4).
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 7] = [
    &[],
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const PI_BETA: f64 = 0.04;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const VIOLATION_SHRINK: f64 = 0.25;

enum Attempt {
    Done {
        x1: Vec<f64>,
        k7: Vec<f64>,
        err: f64,
    },
    Infeasible(Error),
}

#[allow(clippy::too_many_arguments)]
fn attempt<S: Dynamics>(
    sys: &S,
    history: &History,
    t: TimePoint,
    x: &[f64],
    k1: &[f64],
    h: f64,
    land_on: Option<f64>,
    cfg: &SolverConfig,
    stats: &mut SolverStats,
) -> Result<Attempt> {
    let n = x.len();
    let horizon = t.elapsed + t.remaining;
    let mut k: Vec<Vec<f64>> = vec![k1.to_vec()];
    for stage in 1..7 {
        let mut xs = x.to_vec();
        for (j, a) in A[stage].iter().enumerate() {
            if *a != 0.0 {
                axpy(&mut xs, h * a, &k[j]);
            }
        }
        let ts = if let (Some(stop), true) = (land_on, C[stage] == 1.0) {
            TimePoint::before_horizon(stop, horizon)
        } else {
            TimePoint {
                elapsed: t.elapsed + C[stage] * h,
                remaining: t.remaining - C[stage] * h,
            }
        };
        let view = StageView {
            history,
            t0: t.elapsed,
            x0: x,
            t: ts.elapsed,
            x: &xs,
        };
        stats.evaluations += 1;
        match sys.eval(ts, &xs, &view) {
            Ok((f, _)) => {
                if f.iter().any(|v| !v.is_finite()) {
                    return Ok(Attempt::Infeasible(Error::domain("non-finite derivative")));
                }
                k.push(f);
            }
            Err(e @ (Error::FunnelViolation { .. } | Error::Domain(_))) => {
                return Ok(Attempt::Infeasible(e));
            }
            Err(e) => return Err(e),
        }
    }
    // Stage 6 is evaluated at the 5th-order solution.
    let mut x1 = x.to_vec();
    for (j, a) in A[6].iter().enumerate() {
        if *a != 0.0 {
            axpy(&mut x1, h * a, &k[j]);
        }
    }
    let mut acc = 0.0;
    for i in 0..n {
        let est: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
        let scale = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(x1[i].abs());
        acc += (est / scale).powi(2);
    }
    let err = (acc / n.max(1) as f64).sqrt();
    let k7 = k.pop().expect("seven stages");
    Ok(Attempt::Done { x1, k7, err })
}

/// Integrates `sys` from `t = 0` to `horizon - stop_remaining`.
///
/// The remaining time `T - t` is tracked by subtracting accepted steps, and
/// the final step lands on `stop_remaining` exactly. A stage that leaves the
/// feasible set (funnel violation or domain error) rejects the step.
// The partial trace is the useful part of a failure.
#[allow(clippy::result_large_err)]
pub fn solve<S: Dynamics>(
    sys: &mut S,
    x0: Vec<f64>,
    initial: Option<InitialSignal>,
    horizon: f64,
    stop_remaining: f64,
    cfg: &SolverConfig,
) -> Result<Solution<S::Diag>, SolveFailure<S::Diag>> {
    let mut records: Vec<Record<S::Diag>> = Vec::new();
    let mut history = History::new(x0.clone(), initial);
    let mut stats = SolverStats {
        min_step: f64::INFINITY,
        ..Default::default()
    };

    macro_rules! bail {
        ($err:expr) => {{
            return Err(SolveFailure {
                error: $err,
                partial: Solution {
                    records,
                    steps: history.into_steps(),
                    stats,
                    horizon,
                    stop_remaining,
                },
            });
        }};
    }

    if let Err(e) = cfg.validate() {
        bail!(e);
    }
    if x0.len() != sys.dim() {
        bail!(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x0.len()
        });
    }
    if !(stop_remaining >= 0.0 && stop_remaining < horizon) {
        bail!(Error::config(format!(
            "stop point T - {stop_remaining} lies outside (0, T] for T = {horizon}"
        )));
    }

    let mut t = TimePoint::start(horizon);
    let mut x = x0;
    stats.evaluations += 1;
    let (mut fx, d0) = match sys.eval(t, &x, &history) {
        Ok(v) => v,
        Err(e) => bail!(e),
    };
    let mut margin = sys.margin(&d0);
    records.push(Record {
        time: t,
        state: x.clone(),
        diag: d0,
    });

    let mut h = cfg.fixed_step.unwrap_or(cfg.h_init);
    let mut err_prev: f64 = 1e-4;
    let mut last_violation: Option<Error> = None;

    while t.remaining > stop_remaining {
        if stats.accepted >= cfg.max_steps {
            bail!(Error::StepLimit(cfg.max_steps));
        }
        let avail = t.remaining - stop_remaining;
        h = h.min(cfg.h_max);
        if let Some(cap) = sys.max_step() {
            h = h.min(cap);
        }
        if cfg.fixed_step.is_none() && margin < cfg.margin_threshold {
            h *= cfg.margin_factor;
        }
        let last = h >= avail;
        let step = if last { avail } else { h };
        if !last && step < cfg.h_min {
            bail!(last_violation.unwrap_or(Error::StepUnderflow {
                time: t.elapsed,
                remaining: t.remaining,
                step,
            }));
        }

        let land_on = last.then_some(stop_remaining);
        let result = match attempt(&*sys, &history, t, &x, &fx, step, land_on, cfg, &mut stats) {
            Ok(r) => r,
            Err(e) => bail!(e),
        };
        let (x1, k7, err) = match result {
            Attempt::Infeasible(e) => {
                stats.rejected += 1;
                stats.violations += 1;
                if cfg.fixed_step.is_some() {
                    bail!(e);
                }
                last_violation = Some(e);
                h = step * VIOLATION_SHRINK;
                continue;
            }
            Attempt::Done { x1, k7, err } => (x1, k7, err),
        };

        if cfg.fixed_step.is_none() {
            if !err.is_finite() {
                stats.rejected += 1;
                h = step * VIOLATION_SHRINK;
                continue;
            }
            let expo = 0.2 - PI_BETA * 0.75;
            let fac11 = err.powf(expo);
            if err > 1.0 {
                stats.rejected += 1;
                h = step / (1.0 / FAC_MIN).min(fac11 / SAFETY);
                continue;
            }
            let fac = (fac11 / err_prev.powf(PI_BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            err_prev = err.max(1e-4);
            h = step / fac;
        }

        let t1 = if last {
            TimePoint::before_horizon(stop_remaining, horizon)
        } else {
            t.advance(step)
        };
        history.push(DenseStep {
            t0: t.elapsed,
            t1: t1.elapsed,
            x0: x.clone(),
            x1: x1.clone(),
            f0: fx.clone(),
            f1: k7,
        });
        if let Err(e) = sys.on_accept(t.elapsed, t1.elapsed, &history) {
            bail!(e);
        }
        stats.evaluations += 1;
        let (f1, d1) = match sys.eval(t1, &x1, &history) {
            Ok(v) => v,
            Err(e) => bail!(e),
        };
        stats.accepted += 1;
        stats.min_step = stats.min_step.min(step);
        stats.max_step = stats.max_step.max(step);
        last_violation = None;
        margin = sys.margin(&d1);
        t = t1;
        x = x1;
        fx = f1;
        records.push(Record {
            time: t,
            state: x.clone(),
            diag: d1,
        });
    }

    Ok(Solution {
        records,
        steps: history.into_steps(),
        stats,
        horizon,
        stop_remaining,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_growth() -> OdeFn<impl Fn(TimePoint, &[f64]) -> Vec<f64>> {
        OdeFn::new(1, |_, x: &[f64]| vec![x[0]])
    }

    fn tol(rel: f64) -> SolverConfig {
        SolverConfig {
            abs_tol: rel,
            rel_tol: rel,
            h_init: 1e-3,
            h_min: 1e-14,
            h_max: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn exponential_growth() {
        let mut sys = exp_growth();
        let sol = solve(&mut sys, vec![1.0], None, 1.0, 0.0, &tol(1e-10)).unwrap();
        let last = sol.records.last().unwrap();
        assert_eq!(last.time.remaining, 0.0);
        assert_eq!(last.time.elapsed, 1.0);
        assert_relative_eq!(last.state[0], std::f64::consts::E, max_relative = 1e-9);
    }

    #[test]
    fn lands_exactly_on_stop_point() {
        let mut sys = OdeFn::new(1, |_, x: &[f64]| vec![-x[0] / 300.0]);
        let stop = 1e-6;
        let sol = solve(&mut sys, vec![1.0], None, 1800.0, stop, &tol(1e-8)).unwrap();
        assert_eq!(sol.records.last().unwrap().time.remaining, stop);
        assert!(sol
            .records
            .windows(2)
            .all(|w| w[0].time.elapsed < w[1].time.elapsed));
    }

    #[test]
    fn fixed_step_order() {
        let run = |h: f64| {
            let mut sys = OdeFn::new(1, |t: TimePoint, x: &[f64]| vec![-x[0] + t.elapsed.sin()]);
            let cfg = SolverConfig {
                fixed_step: Some(h),
                h_init: h,
                h_min: h,
                h_max: h,
                ..Default::default()
            };
            let sol = solve(&mut sys, vec![1.0], None, 2.0, 0.0, &cfg).unwrap();
            let exact = 1.5 * (-2.0f64).exp() + 0.5 * (2.0f64.sin() - 2.0f64.cos());
            (sol.records.last().unwrap().state[0] - exact).abs()
        };
        let slope = (run(0.1) / run(0.05)).log2();
        assert!((slope - 5.0).abs() < 0.5, "slope {slope}");
    }

    #[test]
    fn hermite_reproduces_cubics_and_is_continuous() {
        let p = |s: f64| 1.0 + 2.0 * s - s * s + 0.5 * s * s * s;
        let dp = |s: f64| 2.0 - 2.0 * s + 1.5 * s * s;
        let steps: Vec<DenseStep> = [(0.0, 0.4), (0.4, 1.0)]
            .iter()
            .map(|&(a, b)| DenseStep {
                t0: a,
                t1: b,
                x0: vec![p(a)],
                x1: vec![p(b)],
                f0: vec![dp(a)],
                f1: vec![dp(b)],
            })
            .collect();
        for s in [0.1, 0.3, 0.55, 0.9] {
            let v = lookup(&steps, &[p(0.0)], None, s).unwrap()[0];
            assert_relative_eq!(v, p(s), max_relative = 1e-14);
        }
        assert_eq!(lookup(&steps, &[p(0.0)], None, 0.4).unwrap(), vec![p(0.4)]);
        let below = steps[0].eval(0.4 - 1e-12)[0];
        let above = steps[1].eval(0.4 + 1e-12)[0];
        assert!((below - above).abs() < 1e-10);
        assert!(lookup(&steps, &[p(0.0)], None, 1.5).is_err());
        assert!(lookup(&steps, &[p(0.0)], None, -0.1).is_err());
    }

    #[test]
    fn hermite_error_is_fourth_order() {
        let q = |s: f64| s.powi(4);
        let dq = |s: f64| 4.0 * s.powi(3);
        let err = |h: f64| {
            let st = DenseStep {
                t0: 1.0,
                t1: 1.0 + h,
                x0: vec![q(1.0)],
                x1: vec![q(1.0 + h)],
                f0: vec![dq(1.0)],
                f1: vec![dq(1.0 + h)],
            };
            (st.eval(1.0 + 0.5 * h)[0] - q(1.0 + 0.5 * h)).abs()
        };
        let slope = (err(0.1) / err(0.05)).log2();
        assert!((slope - 4.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn infeasible_region_rejects_until_underflow() {
        // x' = 1 with a wall at x = 0.5 that no step can cross.
        struct Wall;
        impl Dynamics for Wall {
            type Diag = ();
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, t: TimePoint, x: &[f64], _: &dyn Trajectory) -> Result<(Vec<f64>, ())> {
                if x[0] >= 0.5 {
                    return Err(Error::FunnelViolation {
                        level: 1,
                        norm: x[0],
                        time: t.elapsed,
                    });
                }
                Ok((vec![1.0], ()))
            }
        }
        let cfg = SolverConfig {
            h_min: 1e-10,
            ..tol(1e-8)
        };
        let fail = solve(&mut Wall, vec![0.0], None, 1.0, 0.0, &cfg).unwrap_err();
        assert!(
            matches!(fail.error, Error::FunnelViolation { .. }),
            "{:?}",
            fail.error
        );
        let last = fail.partial.records.last().unwrap();
        assert!(last.state[0] < 0.5 && last.state[0] > 0.49);
    }

    #[test]
    fn invalid_config() {
        let cfg = SolverConfig {
            h_min: 1.0,
            h_init: 0.1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let mut sys = exp_growth();
        assert!(solve(
            &mut sys,
            vec![1.0],
            None,
            1.0,
            2.0,
            &SolverConfig::default()
        )
        .is_err());
    }
}

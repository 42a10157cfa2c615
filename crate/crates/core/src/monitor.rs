//! Post-run verification of a closed-loop trace.
//!
//! Everything here is a deterministic function of the trace; findings are
//! reported, never raised as errors.

use std::fmt::Write as _;

use crate::controller::ControllerConfig;
use crate::integrator::Trace;
use crate::linalg::norm;

/// Thresholds used by [`verify`] and [`finite_difference_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct TolProfile {
    /// Smallest acceptable log-log decay slope of `|e^{(i)}|` against `T - t`.
    pub slope_min: f64,
    /// Decades of remaining time used by the fit, counted back from the last kept record.
    pub fit_decades: f64,
    /// Fraction of the final records left out of the fit.
    pub fit_exclude_fraction: f64,
    /// Relative deviation allowed by the finite-difference audit.
    pub audit_threshold: f64,
    /// Audit window as fractions of the horizon.
    pub audit_window: (f64, f64),
    /// Accuracy `epsilon` for the practical-accuracy entry, if requested.
    pub accuracy: Option<f64>,
}

impl Default for TolProfile {
    fn default() -> Self {
        Self {
            slope_min: 0.8,
            fit_decades: 1.0,
            fit_exclude_fraction: 0.01,
            audit_threshold: 1e-3,
            audit_window: (0.01, 0.99),
            accuracy: None,
        }
    }
}

/// Least-squares fit `log |e^{(i)}| = slope log(T - t) + log C`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub order: usize,
    pub slope: f64,
    /// `exp` of the fitted intercept.
    pub constant: f64,
    /// `max |e^{(i)}(t)| / (T - t)` over the fit window.
    pub ratio_sup: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub residual: f64,
    pub points: usize,
    /// Too few nonzero samples or no spread in `T - t`.
    pub degenerate: bool,
}

/// Earliest recorded time after which `|e^{(i)}| <= epsilon` holds.
#[derive(Debug, Clone, PartialEq)]
pub struct PracticalAccuracy {
    pub epsilon: f64,
    /// Entry `i` is `None` if the bound is not met at the final record.
    pub reached_at: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// `phi(t) |e(t)| < 1` at every record.
    pub funnel_ok: bool,
    /// `min_t (1 - phi(t) |e(t)|)`.
    pub min_margin: f64,
    /// `sup_t |e_k(t)|` for `k = 1..r`.
    pub ek_bounds: Vec<f64>,
    pub cascade_ok: bool,
    /// `sup_t alpha_r(t)` and where it is attained.
    pub gain_sup: f64,
    pub gain_sup_time: f64,
    /// The supremum is finite and attained before `t_max`.
    pub gain_ok: bool,
    pub decay_fits: Vec<DecayFit>,
    /// `|e^{(i)}(t_max)|` for `i = 0..r-1`.
    pub terminal_errors: Vec<f64>,
    /// `c (T - t_max)`.
    pub terminal_bound: f64,
    /// `|e(t_max)| < c (T - t_max)`.
    pub terminal_ok: bool,
    pub practical_accuracy: Option<PracticalAccuracy>,
    pub complete: bool,
    pub records: usize,
    pub t_max: f64,
    pub remaining_at_end: f64,
}

impl VerificationReport {
    /// Every literal assertion holds and every non-degenerate fit meets `slope_min`.
    pub fn passed(&self, tol: &TolProfile) -> bool {
        self.complete
            && self.funnel_ok
            && self.cascade_ok
            && self.gain_ok
            && self.terminal_ok
            && self
                .decay_fits
                .iter()
                .all(|f| f.degenerate || f.slope >= tol.slope_min)
    }

    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "complete = {}", self.complete);
        let _ = writeln!(s, "records = {}", self.records);
        let _ = writeln!(s, "t_max = {:e}", self.t_max);
        let _ = writeln!(s, "remaining_at_end = {:e}", self.remaining_at_end);
        let _ = writeln!(s, "funnel_ok = {}", self.funnel_ok);
        let _ = writeln!(s, "min_margin = {:e}", self.min_margin);
        let _ = writeln!(s, "cascade_ok = {}", self.cascade_ok);
        for (k, b) in self.ek_bounds.iter().enumerate() {
            let _ = writeln!(s, "e{}_sup = {:e}", k + 1, b);
        }
        let _ = writeln!(s, "gain_sup = {:e}", self.gain_sup);
        let _ = writeln!(s, "gain_sup_time = {:e}", self.gain_sup_time);
        let _ = writeln!(s, "gain_ok = {}", self.gain_ok);
        for f in &self.decay_fits {
            let i = f.order;
            let _ = writeln!(s, "decay{i}_slope = {:e}", f.slope);
            let _ = writeln!(s, "decay{i}_constant = {:e}", f.constant);
            let _ = writeln!(s, "decay{i}_ratio_sup = {:e}", f.ratio_sup);
            let _ = writeln!(s, "decay{i}_residual = {:e}", f.residual);
            let _ = writeln!(s, "decay{i}_points = {}", f.points);
            let _ = writeln!(s, "decay{i}_degenerate = {}", f.degenerate);
        }
        for (i, e) in self.terminal_errors.iter().enumerate() {
            let _ = writeln!(s, "terminal_error{i} = {:e}", e);
        }
        let _ = writeln!(s, "terminal_bound = {:e}", self.terminal_bound);
        let _ = writeln!(s, "terminal_ok = {}", self.terminal_ok);
        if let Some(acc) = &self.practical_accuracy {
            let _ = writeln!(s, "accuracy_epsilon = {:e}", acc.epsilon);
            for (i, t) in acc.reached_at.iter().enumerate() {
                match t {
                    Some(t) => {
                        let _ = writeln!(s, "accuracy{i}_from = {:e}", t);
                    }
                    None => {
                        let _ = writeln!(s, "accuracy{i}_from = none");
                    }
                }
            }
        }
        s
    }
}

fn fit_decay(order: usize, samples: &[(f64, f64)]) -> DecayFit {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(rem, e)| *rem > 0.0 && *e > 0.0)
        .map(|(rem, e)| (rem.ln(), e.ln()))
        .collect();
    let ratio_sup = samples
        .iter()
        .filter(|(rem, _)| *rem > 0.0)
        .map(|(rem, e)| e / rem)
        .fold(0.0, f64::max);
    let n = pts.len();
    let degenerate_fit = DecayFit {
        order,
        slope: f64::NAN,
        constant: f64::NAN,
        ratio_sup,
        residual: f64::NAN,
        points: n,
        degenerate: true,
    };
    if n < 3 {
        return degenerate_fit;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return degenerate_fit;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    DecayFit {
        order,
        slope,
        constant: intercept.exp(),
        ratio_sup,
        residual,
        points: n,
        degenerate: false,
    }
}

/// Checks the funnel, cascade, gain and decay assertions over `trace`.
pub fn verify(trace: &Trace, cfg: &ControllerConfig, tol: &TolProfile) -> VerificationReport {
    let r = trace.r;
    let c = cfg.scale();
    let recs = &trace.records;

    let mut min_margin = f64::INFINITY;
    let mut funnel_ok = true;
    let mut ek_bounds = vec![0.0f64; r];
    let mut gain_sup = f64::NEG_INFINITY;
    let mut gain_sup_time = f64::NAN;
    for rec in recs {
        // Recompute phi from the stored remaining time.
        let phi = 1.0 / (c * rec.time.remaining);
        let margin = 1.0 - phi * norm(&rec.errors[0]);
        if !(margin > 0.0) {
            funnel_ok = false;
        }
        min_margin = min_margin.min(margin);
        for (k, e) in rec.cascade.levels.iter().enumerate() {
            ek_bounds[k] = ek_bounds[k].max(norm(e));
        }
        let a = rec.cascade.gains[r - 1];
        if a > gain_sup || !a.is_finite() {
            gain_sup = a;
            gain_sup_time = rec.time.elapsed;
        }
    }
    let cascade_ok = !recs.is_empty() && ek_bounds.iter().all(|b| *b < 1.0);
    let last = recs.last();
    let t_max = last.map_or(0.0, |l| l.time.elapsed);
    let remaining_at_end = last.map_or(f64::NAN, |l| l.time.remaining);
    let gain_ok = gain_sup.is_finite() && gain_sup_time < trace.horizon;

    // Fit window: drop the final fraction of records, then keep the last
    // `fit_decades` decades of remaining time before the cut.
    let exclude = ((recs.len() as f64) * tol.fit_exclude_fraction).ceil() as usize;
    let usable = &recs[..recs.len().saturating_sub(exclude)];
    let window_top = usable
        .last()
        .map_or(0.0, |rec| rec.time.remaining * 10f64.powf(tol.fit_decades));
    let decay_fits = (0..r)
        .map(|i| {
            let samples: Vec<(f64, f64)> = usable
                .iter()
                .filter(|rec| rec.time.remaining <= window_top)
                .map(|rec| (rec.time.remaining, norm(&rec.errors[i])))
                .collect();
            fit_decay(i, &samples)
        })
        .collect();

    let terminal_errors: Vec<f64> = match last {
        Some(l) => l.errors.iter().map(|e| norm(e)).collect(),
        None => vec![f64::NAN; r],
    };
    let terminal_bound = c * remaining_at_end;
    let terminal_ok = terminal_errors[0] < terminal_bound;

    let practical_accuracy = tol.accuracy.map(|epsilon| PracticalAccuracy {
        epsilon,
        reached_at: (0..r).map(|i| accuracy_onset(trace, i, epsilon)).collect(),
    });

    VerificationReport {
        funnel_ok: funnel_ok && !recs.is_empty(),
        min_margin,
        ek_bounds,
        cascade_ok,
        gain_sup,
        gain_sup_time,
        gain_ok,
        decay_fits,
        terminal_errors,
        terminal_bound,
        terminal_ok,
        practical_accuracy,
        complete: trace.is_complete(),
        records: recs.len(),
        t_max,
        remaining_at_end,
    }
}

fn accuracy_onset(trace: &Trace, order: usize, epsilon: f64) -> Option<f64> {
    let mut onset = None;
    for rec in trace.records.iter().rev() {
        if norm(&rec.errors[order]) <= epsilon {
            onset = Some(rec.time.elapsed);
        } else {
            break;
        }
    }
    onset
}

/// Largest relative deviations between central differences of recorded
/// signals and their analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// `e_k' = (c - alpha_k) phi e_k + e_{k+1}` for `k < r`.
    pub level_deviation: f64,
    /// `gamma_k'` against the first jet coefficient, for `k < r`.
    pub gamma_deviation: f64,
    pub samples: usize,
}

impl AuditReport {
    pub fn max_deviation(&self) -> f64 {
        self.level_deviation.max(self.gamma_deviation)
    }

    pub fn passed(&self, tol: &TolProfile) -> bool {
        self.max_deviation() <= tol.audit_threshold
    }
}

/// Three-point derivative at `t1` on the possibly uneven grid `t0 < t1 < t2`.
fn central(t: [f64; 3], v: [&[f64]; 3]) -> Vec<f64> {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    let a = -h1 / (h0 * (h0 + h1));
    let b = (h1 - h0) / (h0 * h1);
    let c = h0 / (h1 * (h0 + h1));
    (0..v[1].len())
        .map(|i| a * v[0][i] + b * v[1][i] + c * v[2][i])
        .collect()
}

/// Compares central differences over `stride` records with the analytic
/// relations for `e_k'` and `gamma_k'` on the audit window of the horizon.
///
/// Each deviation is `max_t |fd - exact| / sup_t |exact|`, per signal.
pub fn finite_difference_audit(
    trace: &Trace,
    cfg: &ControllerConfig,
    stride: usize,
    tol: &TolProfile,
) -> AuditReport {
    let r = trace.r;
    let c = cfg.scale();
    let recs = &trace.records;
    let stride = stride.max(1);
    let (lo, hi) = tol.audit_window;
    let (t_lo, t_hi) = (lo * trace.horizon, hi * trace.horizon);

    // (signal kind, level) -> (max abs deviation, sup of exact derivative)
    let mut level_acc = vec![(0.0f64, 0.0f64); r.saturating_sub(1)];
    let mut gamma_acc = vec![(0.0f64, 0.0f64); r.saturating_sub(1)];
    let mut samples = 0;
    for i in stride..recs.len().saturating_sub(stride) {
        let (a, b, d) = (&recs[i - stride], &recs[i], &recs[i + stride]);
        if b.time.elapsed < t_lo || b.time.elapsed > t_hi {
            continue;
        }
        if a.time.elapsed < t_lo || d.time.elapsed > t_hi {
            continue;
        }
        samples += 1;
        let ts = [a.time.elapsed, b.time.elapsed, d.time.elapsed];
        let phi = b.cascade.phi;
        for k in 0..r.saturating_sub(1) {
            let e = |rec: &crate::integrator::TraceRecord| rec.cascade.levels[k].clone();
            let (ea, eb, ed) = (e(a), e(b), e(d));
            let fd = central(ts, [&ea, &eb, &ed]);
            let exact: Vec<f64> = eb
                .iter()
                .zip(&b.cascade.levels[k + 1])
                .map(|(ek, en)| (c - b.cascade.gains[k]) * phi * ek + en)
                .collect();
            accumulate(&mut level_acc[k], &fd, &exact);

            let g =
                |rec: &crate::integrator::TraceRecord| rec.cascade.gamma_jets[k].value().to_vec();
            let (ga, gb, gd) = (g(a), g(b), g(d));
            let fd = central(ts, [&ga, &gb, &gd]);
            let exact = b.cascade.gamma_derivative(k + 1, 1);
            accumulate(&mut gamma_acc[k], &fd, &exact);
        }
    }
    let worst = |acc: &[(f64, f64)]| {
        acc.iter()
            .map(|(dev, sup)| if *sup > 0.0 { dev / sup } else { *dev })
            .fold(0.0, f64::max)
    };
    AuditReport {
        level_deviation: worst(&level_acc),
        gamma_deviation: worst(&gamma_acc),
        samples,
    }
}

fn accumulate(acc: &mut (f64, f64), fd: &[f64], exact: &[f64]) {
    let dev = fd
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mag = exact.iter().map(|x| x.abs()).fold(0.0, f64::max);
    acc.0 = acc.0.max(dev);
    acc.1 = acc.1.max(mag);
}

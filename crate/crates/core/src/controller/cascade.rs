//! The auxiliary error cascade and the feedback law.
//!
//! For `k = 1..r`
//!
//! ```text
//! e_k     = phi (e^{(k-1)} + sum_{i<k} gamma_i^{(k-1-i)})
//! alpha_k = alpha(|e_k|^2)
//! gamma_k = alpha_k e_k
//! u       = N(alpha_r) e_r
//! ```
//!
//! The derivatives `gamma_i^{(j)}` are total time derivatives along the
//! closed loop. They are computed by propagating Taylor jets of the levels
//! with the substitution rule `de_l/dt = (c - alpha_l) phi e_l + e_{l+1}` and
//! `dphi/dt = c phi^2`, so the jet of `e_l` to order `p` only needs order
//! `p - 1` data of `e_l`, `e_{l+1}` and `phi`.

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm, scaled};
use crate::signals::Jet;
use crate::time::TimePoint;

/// Tracking error and its first `r - 1` derivatives at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDerivatives {
    orders: Vec<Vec<f64>>,
}

impl ErrorDerivatives {
    pub fn new(orders: Vec<Vec<f64>>) -> Result<Self> {
        let m = orders.first().map(Vec::len).unwrap_or(0);
        if m == 0 {
            return Err(Error::config(
                "error derivatives need r >= 1 vectors of dimension >= 1",
            ));
        }
        if let Some(bad) = orders.iter().find(|v| v.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bad.len(),
            });
        }
        Ok(Self { orders })
    }

    /// `e^{(i)}`.
    pub fn order(&self, i: usize) -> &[f64] {
        &self.orders[i]
    }

    pub fn count(&self) -> usize {
        self.orders.len()
    }

    pub fn dim(&self) -> usize {
        self.orders[0].len()
    }

    pub fn as_slices(&self) -> &[Vec<f64>] {
        &self.orders
    }
}

/// Reference derivatives `y_ref^{(i)}(t)`, `i = 0..`, at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSample {
    pub derivatives: Vec<Vec<f64>>,
}

/// `e^{(i)} = y^{(i)} - y_ref^{(i)}` for the stacked state `(y, y', ..., y^{(r-1)})`.
pub fn error_derivatives(
    state: &[f64],
    r: usize,
    m: usize,
    reference: &ReferenceSample,
) -> Result<ErrorDerivatives> {
    if state.len() != r * m {
        return Err(Error::DimensionMismatch {
            expected: r * m,
            got: state.len(),
        });
    }
    if reference.derivatives.len() < r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: reference.derivatives.len(),
        });
    }
    let orders = (0..r)
        .map(|i| {
            let y_ref = &reference.derivatives[i];
            if y_ref.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: y_ref.len(),
                });
            }
            Ok(state[i * m..(i + 1) * m]
                .iter()
                .zip(y_ref)
                .map(|(y, yr)| y - yr)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    ErrorDerivatives::new(orders)
}

/// Everything the controller computed at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeState {
    pub time: TimePoint,
    pub phi: f64,
    /// `e_1..e_r`.
    pub levels: Vec<Vec<f64>>,
    /// `alpha_1..alpha_r`.
    pub gains: Vec<f64>,
    /// Jets of `gamma_1..gamma_{r-1}`; `gamma_i` carries orders `0..=r-i`.
    /// The top order is not needed for `u` and is kept for diagnostics.
    pub gamma_jets: Vec<Jet>,
    pub input: Vec<f64>,
    /// `1 - phi(t) |e(t)|`.
    pub funnel_margin: f64,
}

impl CascadeState {
    pub fn level_norms(&self) -> Vec<f64> {
        self.levels.iter().map(|e| norm(e)).collect()
    }

    /// `min_k (1 - |e_k|)`.
    pub fn min_margin(&self) -> f64 {
        self.levels
            .iter()
            .map(|e| 1.0 - norm(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// `gamma_i^{(j)}` for 1-based `i`.
    pub fn gamma_derivative(&self, i: usize, j: usize) -> Vec<f64> {
        self.gamma_jets[i - 1].derivative(j)
    }
}

/// Incrementally built jets of the cascade levels at one instant.
///
/// After `n` levels have been pushed, level `l` (0-based) holds a jet of
/// order `n - 1 - l`.
struct LevelJets<'a> {
    cfg: &'a ControllerConfig,
    phi: Jet,
    levels: Vec<Jet>,
}

impl<'a> LevelJets<'a> {
    fn new(cfg: &'a ControllerConfig, t: TimePoint) -> Result<Self> {
        let phi = cfg.funnel().jet(t, cfg.relative_degree())?;
        Ok(Self {
            cfg,
            phi,
            levels: Vec::with_capacity(cfg.relative_degree()),
        })
    }

    fn phi(&self) -> f64 {
        self.phi.scalar_value()
    }

    fn push(&mut self, value: Vec<f64>) -> Result<()> {
        self.levels.push(Jet::new(vec![value])?);
        let top = self.levels.len() - 1;
        for l in (0..top).rev() {
            self.extend(l)?;
        }
        Ok(())
    }

    /// Raises the order of level `l` by one using `de_l/dt = (c - alpha_l) phi e_l + e_{l+1}`.
    fn extend(&mut self, l: usize) -> Result<()> {
        let e = &self.levels[l];
        let p = e.order();
        let s = e.inner(e)?;
        let alpha = self.cfg.gain().jet(&s)?;
        let drift = alpha
            .scale(-1.0)
            .offset(&[self.cfg.scale()])?
            .mul(&self.phi.truncated(p))?
            .mul(e)?;
        let next = self.levels[l + 1].coeff(p);
        let q = (p + 1) as f64;
        let coeff: Vec<f64> = drift
            .coeff(p)
            .iter()
            .zip(next)
            .map(|(a, b)| (a + b) / q)
            .collect();
        self.levels[l].push(&coeff)
    }

    /// Jet of `gamma = alpha(|e_l|^2) e_l` to `order`.
    fn gamma(&self, l: usize, order: usize) -> Result<Jet> {
        let e = self.levels[l].truncated(order);
        if e.order() < order {
            return Err(Error::OrderMismatch {
                left: e.order(),
                right: order,
            });
        }
        let alpha = self.cfg.gain().jet(&e.inner(&e)?)?;
        alpha.mul(&e)
    }

    /// `phi (e^{(k-1)} + sum_{i<k} gamma_i^{(k-1-i)})` for the next level `k`.
    fn next_level(&self, errs: &ErrorDerivatives) -> Result<Vec<f64>> {
        let k = self.levels.len() + 1;
        let mut v = errs.order(k - 1).to_vec();
        for i in 1..k {
            let g = self.gamma(i - 1, k - 1 - i)?;
            axpy(&mut v, 1.0, &g.derivative(k - 1 - i));
        }
        Ok(scaled(&v, self.phi()))
    }
}

fn check_dims(cfg: &ControllerConfig, errs: &ErrorDerivatives) -> Result<()> {
    if errs.count() != cfg.relative_degree() {
        return Err(Error::DimensionMismatch {
            expected: cfg.relative_degree(),
            got: errs.count(),
        });
    }
    if errs.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: errs.dim(),
        });
    }
    Ok(())
}

/// Evaluates the full cascade and the input `u` at time `t`.
///
/// Fails with [`Error::FunnelViolation`] naming the first level that leaves
/// the open unit ball.
pub fn build_cascade(
    cfg: &ControllerConfig,
    t: TimePoint,
    errs: &ErrorDerivatives,
) -> Result<CascadeState> {
    check_dims(cfg, errs)?;
    let r = cfg.relative_degree();
    let mut jets = LevelJets::new(cfg, t)?;
    for k in 1..=r {
        let e_k = jets.next_level(errs)?;
        let n = norm(&e_k);
        if !(n < 1.0) {
            return Err(Error::FunnelViolation {
                level: k,
                norm: n,
                time: t.elapsed,
            });
        }
        jets.push(e_k)?;
    }
    let levels: Vec<Vec<f64>> = jets.levels.iter().map(|j| j.value().to_vec()).collect();
    let gains = levels
        .iter()
        .map(|e| cfg.gain().eval(norm(e).powi(2)))
        .collect::<Result<Vec<f64>>>()?;
    let gamma_jets = (1..r)
        .map(|i| jets.gamma(i - 1, r - i))
        .collect::<Result<Vec<Jet>>>()?;
    let n_r = cfg.switching().eval(gains[r - 1])?;
    let input = scaled(&levels[r - 1], n_r);
    let funnel_margin = 1.0 - norm(&levels[0]);
    Ok(CascadeState {
        time: t,
        phi: jets.phi(),
        levels,
        gains,
        gamma_jets,
        input,
        funnel_margin,
    })
}

/// Jet of `gamma_i` to order `j` from the level values `e_i, ..., e_{i+j}`.
///
/// `level` is the 1-based index `i`; `values` has `j + 1` entries. Every
/// value except the last passes through the gain and must lie in the open
/// unit ball; the last one enters linearly. Coefficient `p` times `p!` is
/// `gamma_i^{(p)}(t)`.
pub fn gamma_jet(
    cfg: &ControllerConfig,
    t: TimePoint,
    level: usize,
    values: &[Vec<f64>],
) -> Result<Jet> {
    let r = cfg.relative_degree();
    if values.is_empty() {
        return Err(Error::config("gamma_jet needs at least one level value"));
    }
    let order = values.len() - 1;
    if level == 0 || level > r || order > r - level {
        return Err(Error::config(format!(
            "gamma_{level} of order {order} is not defined for relative degree {r}"
        )));
    }
    let constrained = if order == 0 { 1 } else { order };
    for (idx, v) in values.iter().enumerate() {
        if v.len() != cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                got: v.len(),
            });
        }
        let n = norm(v);
        if idx < constrained && !(n < 1.0) {
            return Err(Error::FunnelViolation {
                level: level + idx,
                norm: n,
                time: t.elapsed,
            });
        }
    }
    let mut jets = LevelJets::new(cfg, t)?;
    for v in values {
        jets.push(v.clone())?;
    }
    jets.gamma(0, order)
}

/// Input and diagnostics for stacked state `x = (y, ..., y^{(r-1)})` at `t`.
pub fn control(
    cfg: &ControllerConfig,
    t: TimePoint,
    state: &[f64],
    reference: &ReferenceSample,
) -> Result<(Vec<f64>, CascadeState)> {
    let errs = error_derivatives(state, cfg.relative_degree(), cfg.dim(), reference)?;
    let cascade = build_cascade(cfg, t, &errs)?;
    Ok((cascade.input.clone(), cascade))
}

/// Result of checking `|e_k(0)| < 1` for all levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `|e_k(0)|` for every level that could be evaluated.
    pub norms: Vec<f64>,
    /// `1 - |e_k(0)|`, aligned with `norms`.
    pub margins: Vec<f64>,
    /// First level (1-based) with `|e_k(0)| >= 1`; later levels are undefined.
    pub failed_level: Option<usize>,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.failed_level.is_none()
    }
}

/// Evaluates the initial cascade without raising on violations.
pub fn check_initial_feasibility(
    cfg: &ControllerConfig,
    state0: &[f64],
    reference0: &ReferenceSample,
) -> Result<FeasibilityReport> {
    let errs = error_derivatives(state0, cfg.relative_degree(), cfg.dim(), reference0)?;
    check_dims(cfg, &errs)?;
    let mut jets = LevelJets::new(cfg, TimePoint::start(cfg.horizon()))?;
    let mut norms = Vec::new();
    let mut failed_level = None;
    for k in 1..=cfg.relative_degree() {
        let e_k = jets.next_level(&errs)?;
        let n = norm(&e_k);
        norms.push(n);
        if !(n < 1.0) {
            failed_level = Some(k);
            break;
        }
        jets.push(e_k)?;
    }
    let margins = norms.iter().map(|n| 1.0 - n).collect();
    Ok(FeasibilityReport {
        norms,
        margins,
        failed_level,
    })
}

/// Geometric grid of candidate funnel scales `start * ratio^i`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for ScaleGrid {
    fn default() -> Self {
        Self {
            start: 1e-3,
            ratio: 2f64.sqrt(),
            count: 80,
        }
    }
}

/// Smallest grid scale `c` with `|e_k(0)| <= 1 - margin` for every level.
///
/// Each candidate is checked directly; no monotonicity in `c` is assumed.
pub fn tune_c(
    template: &ControllerConfig,
    state0: &[f64],
    reference0: &ReferenceSample,
    margin: f64,
    grid: ScaleGrid,
) -> Result<f64> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::config(format!(
            "margin must lie in (0, 1), got {margin}"
        )));
    }
    if !(grid.start > 0.0 && grid.ratio > 1.0 && grid.count > 0) {
        return Err(Error::config(
            "scale grid needs start > 0, ratio > 1, count > 0",
        ));
    }
    let mut best = f64::INFINITY;
    for i in 0..grid.count {
        let c = grid.start * grid.ratio.powi(i as i32);
        let cfg = template.with_scale(c)?;
        let report = check_initial_feasibility(&cfg, state0, reference0)?;
        let worst = report.norms.iter().copied().fold(0.0, f64::max);
        if report.passed() && worst <= 1.0 - margin {
            return Ok(c);
        }
        best = best.min(worst);
    }
    Err(Error::NoFeasibleC { best_norm: best })
}

//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use funnel_core::cli::{check, run, Exit, Outcome, Scenario};
use funnel_core::integrator::{solve, OdeFn, SolverConfig};
use funnel_core::monitor::TolProfile;
use funnel_core::systems::{Delay, Fading, FnTrajectory, Memoryless, Operator};
use funnel_core::TimePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn load(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(format!("{name}.toml"))).expect("shipped scenario loads")
}

fn run_named(name: &str) -> Outcome {
    run(&load(name), &TolProfile::default())
}

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            ok,
            detail: detail.into(),
        }
    }
}

fn ac1() -> Verdict {
    let out = run_named("cw_docking");
    let Some(v) = &out.verification else {
        return Verdict::new(false, format!("run ended with {:?}", out.error));
    };
    let eps = 1e-6;
    let ok = out.exit == Exit::Ok
        && v.complete
        && v.funnel_ok
        && v.remaining_at_end == eps
        && v.terminal_errors[0] < v.terminal_bound
        && v.terminal_bound <= eps;
    let mut detail = format!(
        "t_max={} remaining={:e} |e(t_max)|={:e} bound={:e} min_margin={:.4}",
        v.t_max, v.remaining_at_end, v.terminal_errors[0], v.terminal_bound, v.min_margin
    );

    // Stretch: eps = 1e-10, gated only on the certified funnel inequality.
    let stretch = run_named("cw_docking_stretch");
    let stretch_ok = match &stretch.verification {
        Some(s) => {
            detail += &format!(
                "; stretch eps=1e-10: complete={} funnel={} |e(t_max)|={:e} bound={:e}",
                s.complete, s.funnel_ok, s.terminal_errors[0], s.terminal_bound
            );
            s.complete && s.funnel_ok && s.terminal_errors[0] < s.terminal_bound
        }
        None => {
            detail += &format!("; stretch failed: {:?}", stretch.error);
            false
        }
    };
    Verdict::new(ok && stretch_ok, detail)
}

fn ac2() -> Verdict {
    let out = run_named("cw_docking");
    let Some(v) = &out.verification else {
        return Verdict::new(false, format!("run ended with {:?}", out.error));
    };
    let Some(fit) = v.decay_fits.iter().find(|f| f.order == 1) else {
        return Verdict::new(false, "no velocity fit");
    };
    let slope_ok = !fit.degenerate && (0.8..=1.2).contains(&fit.slope);
    let terminal = v.terminal_errors[1];
    Verdict::new(
        slope_ok && terminal < 1e-3,
        format!(
            "velocity slope={:.4} over {} points, |e'(t_max)|={:e} m/s",
            fit.slope, fit.points, terminal
        ),
    )
}

fn ac3() -> Verdict {
    // Hand arithmetic: e(0) = y(0) - zeta_0 = 0, and with
    // zeta_ref'(0) = -zeta_0 pi/(2T), e'(0) = y'(0) + zeta_0 pi/(2T).
    // e_1 = 0 gives gamma_1 = 0, so e_2(0) = phi(0) e'(0) = e'(0)/(cT).
    let horizon = 1800.0;
    let zeta0 = [1000.0, -1000.0, 250.0];
    let v0 = [-0.1, 1.69, -0.05];
    let k = std::f64::consts::PI / (2.0 * horizon);
    let ed: Vec<f64> = (0..3).map(|j| v0[j] + zeta0[j] * k).collect();
    let oracle = common::norm(&ed) / horizon;

    let out = check(&load("cw_docking"));
    let Some(f) = &out.feasibility else {
        return Verdict::new(false, format!("check failed: {:?}", out.error));
    };
    let ok = out.exit == Exit::Ok
        && f.norms[0] == 0.0
        && (f.norms[1] - 6.318e-4).abs() <= 1e-7
        && (f.norms[1] - oracle).abs() <= 1e-12;
    Verdict::new(
        ok,
        format!(
            "|e_1(0)|={:e} |e_2(0)|={:.7e} oracle={:.7e}",
            f.norms[0], f.norms[1], oracle
        ),
    )
}

fn ac4() -> Verdict {
    let mut worst: f64 = 0.0;
    for (seed, (r, m)) in [(2, 1), (2, 3), (3, 1), (3, 3)].into_iter().enumerate() {
        worst = worst.max(common::gamma_deviation(r, m, 1000, 0xA4 + seed as u64));
    }
    let out = run_named("cw_docking");
    let Some(audit) = &out.audit else {
        return Verdict::new(false, format!("CW run failed: {:?}", out.error));
    };
    Verdict::new(
        worst <= 1e-10 && audit.gamma_deviation <= 1e-4,
        format!(
            "jet vs hand worst={:e}; CW gamma_1 FD deviation={:e} over {} samples",
            worst, audit.gamma_deviation, audit.samples
        ),
    )
}

fn shipped() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(scenario_dir())
        .expect("scenario directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            if p.extension()? != "toml" {
                return None;
            }
            Some(p.file_stem()?.to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

fn ac5() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in shipped() {
        let out = run_named(&name);
        if !out.feasibility.as_ref().is_some_and(|f| f.passed()) {
            parts.push(format!("{name}: infeasible, skipped"));
            continue;
        }
        match &out.verification {
            Some(v) => {
                let sup = v.ek_bounds.iter().cloned().fold(0.0, f64::max);
                let good = sup < 1.0 && v.gain_sup.is_finite();
                ok &= good;
                parts.push(format!(
                    "{name}: sup|e_k|={sup:.4} sup alpha_r={:.4}",
                    v.gain_sup
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{name}: {:?}", out.error));
            }
        }
    }
    Verdict::new(ok, parts.join("; "))
}

fn ac6() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["scalar_rd1", "chain_integrator_r3"] {
        let out = run_named(name);
        match &out.verification {
            Some(v) => {
                let good = out.exit == Exit::Ok && v.complete && v.funnel_ok && v.terminal_ok;
                ok &= good;
                parts.push(format!(
                    "{name}: r={} |e(t_max)|={:e} bound={:e} terminal derivatives={:?}",
                    v.ek_bounds.len(),
                    v.terminal_errors[0],
                    v.terminal_bound,
                    &v.terminal_errors[1..]
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{name}: {:?}", out.error));
            }
        }
    }
    Verdict::new(ok, parts.join("; "))
}

/// Random smooth scalar signal `a sin(w s + p) + b`, bounded by `|a| + |b|`.
fn signal(rng: &mut ChaCha8Rng) -> ([f64; 4], f64) {
    let p = [
        rng.gen_range(-2.0..2.0),
        rng.gen_range(0.1..5.0),
        rng.gen_range(0.0..6.3),
        rng.gen_range(-1.0..1.0),
    ];
    (p, p[0].abs() + p[3].abs())
}

fn eval(p: [f64; 4], s: f64) -> f64 {
    p[0] * (p[1] * s + p[2]).sin() + p[3]
}

/// Causality: inputs equal on `[-sigma, t)` give equal outputs on `[0, t)`.
/// BIBO: `|T(x)(s)| <= declared_bound(sup |x|)` for sampled `s`.
fn operator_contract(op: &dyn Operator, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..50 {
        let (p, bound) = signal(rng);
        let (q, _) = signal(rng);
        let cut: f64 = rng.gen_range(0.5..5.0);
        let x = FnTrajectory::new(1, move |s| vec![eval(p, s)]);
        let y = FnTrajectory::new(1, move |s| {
            vec![if s < cut { eval(p, s) } else { eval(q, s) }]
        });
        for i in 0..20 {
            let s = cut * i as f64 / 20.0;
            let a = op.evaluate(s, &x).map_err(|e| e.to_string())?;
            let b = op.evaluate(s, &y).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("causality broken at s={s} (cut {cut})"));
            }
        }
        let declared = op.declared_bound(bound).ok_or("no declared bound")?;
        for i in 0..40 {
            let s = 10.0 * i as f64 / 40.0;
            let out = op.evaluate(s, &x).map_err(|e| e.to_string())?;
            if common::norm(&out) > declared * (1.0 + 1e-12) {
                return Err(format!(
                    "|T(x)({s})| = {} exceeds {declared}",
                    common::norm(&out)
                ));
            }
        }
    }
    Ok(())
}

fn ac7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let ops: Vec<(&str, Box<dyn Operator>)> = vec![
        (
            "memoryless",
            Box::new(Memoryless::new(1, 1, |x| vec![x[0].tanh()], Some(1.0))),
        ),
        ("delay", Box::new(Delay::new(1, 0.5).unwrap())),
        ("fading", Box::new(Fading::new(1, 0.5).unwrap())),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, op) in &ops {
        match operator_contract(op.as_ref(), &mut rng) {
            Ok(()) => parts.push(format!("{name}: ok")),
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    let out = run_named("delay_rd1");
    match &out.verification {
        Some(v) => {
            ok &= out.exit == Exit::Ok && v.complete && v.funnel_ok;
            parts.push(format!(
                "delay_rd1: complete={} min_margin={:.4}",
                v.complete, v.min_margin
            ));
        }
        None => {
            ok = false;
            parts.push(format!("delay_rd1: {:?}", out.error));
        }
    }
    Verdict::new(ok, parts.join("; "))
}

fn ac8() -> Verdict {
    // Adaptive: x' = x on [0, 1], abs = rel = tol; least-squares slope of
    // log(error) against log(tol).
    let tols = [1e-6, 1e-7, 1e-8, 1e-9, 1e-10];
    let mut pts = Vec::new();
    for &tol in &tols {
        let mut sys = OdeFn::new(1, |_: TimePoint, x: &[f64]| vec![x[0]]);
        let cfg = SolverConfig {
            abs_tol: tol,
            rel_tol: tol,
            h_init: 1e-3,
            h_min: 1e-14,
            h_max: 1.0,
            ..Default::default()
        };
        let sol = solve(&mut sys, vec![1.0], None, 1.0, 0.0, &cfg).expect("exp growth solves");
        let err = (sol.records.last().unwrap().state[0] - std::f64::consts::E).abs();
        pts.push((tol.ln(), err.ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let adaptive = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    // Fixed step: error ratio under halving h gives the method order.
    let fixed = |h: f64| {
        let mut sys = OdeFn::new(1, |_: TimePoint, x: &[f64]| vec![x[0]]);
        let cfg = SolverConfig {
            fixed_step: Some(h),
            h_init: h,
            h_min: h,
            h_max: h,
            ..Default::default()
        };
        let sol = solve(&mut sys, vec![1.0], None, 1.0, 0.0, &cfg).expect("fixed step solves");
        (sol.records.last().unwrap().state[0] - std::f64::consts::E).abs()
    };
    let order = (fixed(0.1) / fixed(0.05)).log2();

    // Remaining-time bookkeeping on the CW run: T - t_max == eps/c exactly.
    let out = run_named("cw_docking");
    let remaining = out
        .trace
        .as_ref()
        .and_then(|t| t.last())
        .map_or(f64::NAN, |r| r.time.remaining);
    let ok = (adaptive - 1.0).abs() <= 0.5 && (order - 5.0).abs() <= 0.5 && remaining == 1e-6 / 1.0;
    Verdict::new(
        ok,
        format!("adaptive error-vs-tol slope={adaptive:.3}, fixed-step order={order:.3}, CW remaining={remaining:e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let v = f();
        println!(
            "{name} {}: {}",
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.ok {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::cli::output::{trace_csv, CSV_SCHEMA_VERSION};
use crate::cli::scenario::Scenario;
use crate::controller::{check_initial_feasibility, FeasibilityReport};
use crate::error::{Error, Result};
use crate::integrator::{simulate, Trace};
use crate::linalg::norm;
use crate::monitor::{
    finite_difference_audit, verify, AuditReport, TolProfile, VerificationReport,
};
use crate::time::TimePoint;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Config = 1,
    Infeasible = 2,
    /// Funnel violation during integration, or a failed verification.
    Violation = 3,
    /// Step-size underflow or step limit.
    Solver = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn label(self) -> &'static str {
        match self {
            Exit::Ok => "ok",
            Exit::Config => "config_error",
            Exit::Infeasible => "infeasible",
            Exit::Violation => "funnel_violation",
            Exit::Solver => "solver_failure",
        }
    }

    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::FunnelViolation { .. } => Exit::Violation,
            Error::StepUnderflow { .. } | Error::StepLimit(_) => Exit::Solver,
            Error::NoFeasibleC { .. } => Exit::Infeasible,
            _ => Exit::Config,
        }
    }
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub eps: Option<f64>,
    /// Relative tolerance; the absolute tolerance keeps its ratio to it.
    pub tol: Option<f64>,
    pub fixed_step: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) {
        let d = crate::integrator::SolverConfig::default();
        let s = &mut scenario.solver;
        if let Some(eps) = self.eps {
            s.eps = Some(eps);
        }
        if let Some(tol) = self.tol {
            let rel = s.rel_tol.unwrap_or(d.rel_tol);
            let abs = s.abs_tol.unwrap_or(d.abs_tol);
            s.rel_tol = Some(tol);
            s.abs_tol = Some(abs * tol / rel);
        }
        if let Some(h) = self.fixed_step {
            s.fixed_step = Some(h);
            s.h_init = Some(h);
            s.h_min = Some(s.h_min.unwrap_or(d.h_min).min(h));
            s.h_max = Some(s.h_max.unwrap_or(d.h_max).max(h));
        }
    }
}

/// Result of `check` or `run` on one scenario.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit: Exit,
    pub feasibility: Option<FeasibilityReport>,
    pub trace: Option<Trace>,
    pub verification: Option<VerificationReport>,
    pub audit: Option<AuditReport>,
    pub error: Option<Error>,
}

impl Outcome {
    fn failed(exit: Exit, error: Error) -> Self {
        Self {
            exit,
            feasibility: None,
            trace: None,
            verification: None,
            audit: None,
            error: Some(error),
        }
    }

    /// `key = value` report.
    pub fn report(&self, scenario: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {scenario}");
        let _ = writeln!(s, "status = {}", self.exit.label());
        let _ = writeln!(s, "exit_code = {}", self.exit.code());
        let _ = writeln!(s, "csv_schema = {CSV_SCHEMA_VERSION}");
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error = {e}");
        }
        if let Some(f) = &self.feasibility {
            let _ = writeln!(s, "feasible = {}", f.passed());
            for (k, (n, m)) in f.norms.iter().zip(&f.margins).enumerate() {
                let _ = writeln!(s, "e{}_initial_norm = {:e}", k + 1, n);
                let _ = writeln!(s, "e{}_initial_margin = {:e}", k + 1, m);
            }
            if let Some(k) = f.failed_level {
                let _ = writeln!(s, "failed_level = {k}");
            }
        }
        if let Some(t) = &self.trace {
            let _ = writeln!(s, "accepted_steps = {}", t.stats.accepted);
            let _ = writeln!(s, "rejected_steps = {}", t.stats.rejected);
            let _ = writeln!(s, "rhs_evaluations = {}", t.stats.evaluations);
        }
        if let Some(v) = &self.verification {
            s.push_str(&v.to_key_value());
        }
        if let Some(a) = &self.audit {
            let _ = writeln!(s, "audit_level_deviation = {:e}", a.level_deviation);
            let _ = writeln!(s, "audit_gamma_deviation = {:e}", a.gamma_deviation);
            let _ = writeln!(s, "audit_samples = {}", a.samples);
        }
        s
    }
}

/// Initial feasibility only.
pub fn check(scenario: &Scenario) -> Outcome {
    let built = match scenario.build() {
        Ok(b) => b,
        Err(e) => return Outcome::failed(Exit::Config, e),
    };
    let cfg = &built.controller;
    let sample = match built
        .reference
        .sample(TimePoint::start(cfg.horizon()), cfg.relative_degree())
    {
        Ok(s) => s,
        Err(e) => return Outcome::failed(Exit::Config, e),
    };
    match check_initial_feasibility(cfg, &built.model.initial_state(), &sample) {
        Ok(report) => Outcome {
            exit: if report.passed() {
                Exit::Ok
            } else {
                Exit::Infeasible
            },
            feasibility: Some(report),
            trace: None,
            verification: None,
            audit: None,
            error: None,
        },
        Err(e) => Outcome::failed(Exit::Config, e),
    }
}

/// Feasibility check, integration to `t_max` and verification.
pub fn run(scenario: &Scenario, tol: &TolProfile) -> Outcome {
    let mut outcome = check(scenario);
    if outcome.exit != Exit::Ok {
        return outcome;
    }
    let mut built = match scenario.build() {
        Ok(b) => b,
        Err(e) => return Outcome::failed(Exit::Config, e),
    };
    let cfg = built.controller.clone();
    match simulate(
        &mut built.model,
        &cfg,
        built.reference.as_ref(),
        &built.solver,
    ) {
        Ok(trace) => {
            let report = verify(&trace, &cfg, tol);
            outcome.exit = if report.passed(tol) {
                Exit::Ok
            } else {
                Exit::Violation
            };
            outcome.audit = Some(finite_difference_audit(&trace, &cfg, 1, tol));
            outcome.verification = Some(report);
            outcome.trace = Some(trace);
        }
        Err(failure) => {
            outcome.exit = Exit::from_error(&failure.error);
            outcome.error = Some(failure.error);
            outcome.trace = Some(failure.partial);
        }
    }
    outcome
}

/// Writes the trace CSV (if any) and the report into `dir`.
pub fn write_artifacts(scenario: &Scenario, outcome: &Outcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))?;
    let io = |path: &Path, text: &str| {
        std::fs::write(path, text)
            .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))
    };
    if let Some(trace) = &outcome.trace {
        io(&dir.join(scenario.trace_file()), &trace_csv(trace))?;
    }
    io(
        &dir.join(scenario.report_file()),
        &outcome.report(&scenario.name),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    C,
    T,
    Eps,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::C => "c",
            SweepParam::T => "T",
            SweepParam::Eps => "eps",
        }
    }

    fn apply(self, scenario: &mut Scenario, value: f64) {
        match self {
            SweepParam::C => scenario.controller.c = value,
            SweepParam::T => scenario.controller.horizon = value,
            SweepParam::Eps => scenario.solver.eps = Some(value),
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "c" => Ok(SweepParam::C),
            "T" => Ok(SweepParam::T),
            "eps" => Ok(SweepParam::Eps),
            other => Err(format!(
                "unknown sweep parameter {other:?} (expected c, T or eps)"
            )),
        }
    }
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub exit: Exit,
    pub feasible: bool,
    pub gain_sup: f64,
    pub input_sup: f64,
    pub terminal_errors: Vec<f64>,
}

/// Runs every grid point of `param`; rows come back in grid order.
pub fn sweep(
    scenario: &Scenario,
    param: SweepParam,
    grid: &[f64],
    tol: &TolProfile,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::config("sweep grid is empty"));
    }
    let r = scenario.system.shape().0;
    Ok(grid
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let mut s = scenario.clone();
            param.apply(&mut s, value);
            let out = run(&s, tol);
            let feasible = out.feasibility.as_ref().is_some_and(|f| f.passed());
            let (gain_sup, input_sup) = out.trace.as_ref().map_or((f64::NAN, f64::NAN), |t| {
                t.records.iter().fold((f64::NAN, f64::NAN), |(g, u), rec| {
                    (g.max(rec.cascade.gains[r - 1]), u.max(norm(rec.input())))
                })
            });
            let terminal_errors = out
                .trace
                .as_ref()
                .and_then(|t| t.last())
                .map_or(vec![f64::NAN; r], |rec| {
                    rec.errors.iter().map(|e| norm(e)).collect()
                });
            SweepRow {
                index,
                value,
                exit: out.exit,
                feasible,
                gain_sup,
                input_sup,
                terminal_errors,
            }
        })
        .collect())
}

pub fn sweep_csv(param: SweepParam, r: usize, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "index,{},status,exit_code,feasible,alpha_r_sup,u_sup,{}\n",
        param.name(),
        (0..r)
            .map(|i| format!("terminal_error{i}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    for row in rows {
        let _ = write!(
            out,
            "{},{:e},{},{},{},{:e},{:e}",
            row.index,
            row.value,
            row.exit.label(),
            row.exit.code(),
            row.feasible,
            row.gain_sup,
            row.input_sup
        );
        for e in &row.terminal_errors {
            let _ = write!(out, ",{e:e}");
        }
        out.push('\n');
    }
    out
}

//! Scenario-driven front end: `run`, `check` and `sweep`.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    check, run, sweep, sweep_csv, write_artifacts, Exit, Outcome, Overrides, SweepParam, SweepRow,
};
pub use output::{csv_header, trace_csv, CSV_SCHEMA_VERSION};
pub use scenario::{
    Built, ControllerSpec, GainSpec, InitialSpec, OutputSpec, ReferenceSpec, Scenario, SolverSpec,
    SwitchingSpec, SystemSpec,
};

use crate::monitor::TolProfile;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FUNNEL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "funnel",
    version,
    about = "Prescribed finite-time funnel control simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Scenario file (TOML).
    pub scenario: PathBuf,
    /// Output directory for traces and reports.
    #[arg(long, env = OUT_DIR_ENV, default_value = "funnel-out")]
    pub out: PathBuf,
    /// Override the final accuracy eps; integration stops at T - eps/c.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Override the relative tolerance (the absolute tolerance is scaled along).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Integrate with a constant step instead of adaptive control.
    #[arg(long, value_name = "H")]
    pub fixed_step: Option<f64>,
    #[arg(long)]
    pub quiet: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            eps: self.eps,
            tol: self.tol,
            fixed_step: self.fixed_step,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check feasibility, integrate to t_max, verify, write CSV and report.
    Run(Common),
    /// Print the initial cascade norms and margins only.
    Check(Common),
    /// Run a grid of values for one parameter and write a summary table.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary: c, T or eps.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
}

fn load(common: &Common) -> Result<Scenario, i32> {
    match Scenario::load(&common.scenario) {
        Ok(mut s) => {
            common.overrides().apply(&mut s);
            Ok(s)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(Exit::Config.code())
        }
    }
}

/// Parses `args` and executes the command; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Exit::Config.code()
            } else {
                0
            };
        }
    };
    let tol = TolProfile::default();
    match cli.command {
        Command::Check(common) => {
            let scenario = match load(&common) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let out = check(&scenario);
            if !common.quiet || out.exit != Exit::Ok {
                print!("{}", out.report(&scenario.name));
            }
            out.exit.code()
        }
        Command::Run(common) => {
            let scenario = match load(&common) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let out = run(&scenario, &tol);
            if let Err(e) = write_artifacts(&scenario, &out, &common.out) {
                eprintln!("error: {e}");
                return Exit::Config.code();
            }
            if !common.quiet {
                print!("{}", out.report(&scenario.name));
            } else if let Some(e) = &out.error {
                eprintln!("error: {e}");
            }
            out.exit.code()
        }
        Command::Sweep {
            common,
            param,
            grid,
        } => {
            let scenario = match load(&common) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let rows = match sweep(&scenario, param, &grid, &tol) {
                Ok(rows) => rows,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Exit::Config.code();
                }
            };
            let table = sweep_csv(param, scenario.system.shape().0, &rows);
            let path = common
                .out
                .join(format!("{}_sweep_{}.csv", scenario.name, param.name()));
            let written =
                std::fs::create_dir_all(&common.out).and_then(|_| std::fs::write(&path, &table));
            if let Err(e) = written {
                eprintln!("error: cannot write {}: {e}", path.display());
                return Exit::Config.code();
            }
            if !common.quiet {
                print!("{table}");
            }
            Exit::Ok.code()
        }
    }
}

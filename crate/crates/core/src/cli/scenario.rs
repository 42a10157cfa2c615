use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::integrator::SolverConfig;
use crate::signals::{FunnelFunction, GainFunction, SwitchingFunction};
use crate::systems::{
    ClohessyWiltshireModel, Constant, DockingReference, InitialHistory, ReferenceTrajectory,
    Sinusoid, SystemModel, EARTH_MU, EARTH_RADIUS, ISS_ALTITUDE,
};

/// A scenario file: plant, reference, initial data, controller design,
/// solver settings and output names.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSpec,
    pub reference: ReferenceSpec,
    pub initial: InitialSpec,
    pub controller: ControllerSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    ClohessyWiltshire {
        /// Target altitude `r_s` (m).
        #[serde(default = "iss_altitude")]
        altitude: f64,
        #[serde(default = "earth_mu")]
        mu: f64,
        #[serde(default = "earth_radius")]
        earth_radius: f64,
    },
    ChainIntegrator {
        r: usize,
        m: usize,
    },
    ScalarRd1,
    DelayRd1 {
        a: f64,
        tau: f64,
        #[serde(default)]
        disturbance: f64,
    },
    FadingRd1 {
        a: f64,
        lambda: f64,
    },
}

fn iss_altitude() -> f64 {
    ISS_ALTITUDE
}

fn earth_mu() -> f64 {
    EARTH_MU
}

fn earth_radius() -> f64 {
    EARTH_RADIUS
}

impl SystemSpec {
    /// `(r, m)` of the plant.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            SystemSpec::ClohessyWiltshire { .. } => (2, 3),
            SystemSpec::ChainIntegrator { r, m } => (*r, *m),
            SystemSpec::ScalarRd1 | SystemSpec::DelayRd1 { .. } | SystemSpec::FadingRd1 { .. } => {
                (1, 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// `start (1 - sin(pi t / 2T))`; `start` defaults to the initial output.
    Docking {
        #[serde(default)]
        start: Option<Vec<f64>>,
    },
    Sinusoid {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        #[serde(default)]
        phase: Option<Vec<f64>>,
    },
    Constant {
        value: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// `(y(0), y'(0), ..., y^{(r-1)}(0))`, stacked.
    pub state: Vec<f64>,
    /// Constant state on `[-sigma, 0)`; defaults to `state`.
    #[serde(default)]
    pub history: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub c: f64,
    #[serde(default)]
    pub alpha: GainSpec,
    #[serde(default, rename = "N")]
    pub switching: SwitchingSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainSpec {
    /// `c (r + 1) / (1 - s)`.
    #[default]
    Reciprocal,
    /// `c (r + 1) / (1 - s)^p`.
    Power { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SwitchingSpec {
    /// `-s cos(w s)`.
    Oscillating { frequency: f64 },
    /// `s sin(w s)`.
    SineOscillating { frequency: f64 },
}

impl Default for SwitchingSpec {
    fn default() -> Self {
        SwitchingSpec::Oscillating { frequency: 1e-2 }
    }
}

/// Solver settings; missing fields take the [`SolverConfig`] defaults.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub h_init: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub eps: Option<f64>,
    pub margin_factor: Option<f64>,
    pub margin_threshold: Option<f64>,
    pub fixed_step: Option<f64>,
    pub max_steps: Option<usize>,
}

impl SolverSpec {
    pub fn to_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            h_init: self.h_init.unwrap_or(d.h_init),
            h_min: self.h_min.unwrap_or(d.h_min),
            h_max: self.h_max.unwrap_or(d.h_max),
            eps: self.eps.unwrap_or(d.eps),
            margin_factor: self.margin_factor.unwrap_or(d.margin_factor),
            margin_threshold: self.margin_threshold.unwrap_or(d.margin_threshold),
            fixed_step: self.fixed_step.or(d.fixed_step),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Trace file name, relative to the output directory.
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Everything needed for one closed-loop run.
pub struct Built {
    pub model: SystemModel,
    pub controller: ControllerConfig,
    pub reference: Box<dyn ReferenceTrajectory>,
    pub solver: SolverConfig,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Checks that `r`, `m`, the reference and the initial data agree.
    pub fn validate(&self) -> Result<()> {
        let (r, m) = self.system.shape();
        if r == 0 || m == 0 {
            return Err(Error::config("system needs r >= 1 and m >= 1"));
        }
        let dim_check = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "{what} has length {got}, expected {want}"
                )))
            }
        };
        dim_check("initial.state", self.initial.state.len(), r * m)?;
        if let Some(h) = &self.initial.history {
            dim_check("initial.history", h.len(), r * m)?;
        }
        match &self.reference {
            ReferenceSpec::Docking { start } => {
                if let Some(s) = start {
                    dim_check("reference.start", s.len(), m)?;
                }
            }
            ReferenceSpec::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                dim_check("reference.offset", offset.len(), m)?;
                dim_check("reference.amplitude", amplitude.len(), m)?;
                dim_check("reference.frequency", frequency.len(), m)?;
                if let Some(p) = phase {
                    dim_check("reference.phase", p.len(), m)?;
                }
            }
            ReferenceSpec::Constant { value } => dim_check("reference.value", value.len(), m)?,
        }
        if !(self.controller.horizon > 0.0 && self.controller.c > 0.0) {
            return Err(Error::config("controller needs T > 0 and c > 0"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Built> {
        self.validate()?;
        let (r, m) = self.system.shape();
        let x0 = self.initial.state.clone();
        let mut model = match &self.system {
            SystemSpec::ClohessyWiltshire {
                altitude,
                mu,
                earth_radius,
            } => ClohessyWiltshireModel::new(*mu, *earth_radius, *altitude)?
                .system_model(x0.clone())?,
            SystemSpec::ChainIntegrator { r, m } => {
                SystemModel::chain_integrator(*r, *m, x0.clone())?
            }
            SystemSpec::ScalarRd1 => SystemModel::chain_integrator(1, 1, x0.clone())?,
            SystemSpec::DelayRd1 {
                a,
                tau,
                disturbance,
            } => SystemModel::delayed_scalar(*a, *tau, *disturbance, x0[0])?,
            SystemSpec::FadingRd1 { a, lambda } => SystemModel::fading_scalar(*a, *lambda, x0[0])?,
        };
        if let Some(past) = &self.initial.history {
            let past = past.clone();
            let now = x0.clone();
            model = model.with_history(InitialHistory::Custom {
                dim: r * m,
                signal: std::sync::Arc::new(
                    move |s| if s < 0.0 { past.clone() } else { now.clone() },
                ),
            })?;
        }

        let ctl = &self.controller;
        let gain = match ctl.alpha {
            GainSpec::Reciprocal => GainFunction::reciprocal(ctl.c, r),
            GainSpec::Power { exponent } => GainFunction::power(ctl.c, r, exponent)?,
        };
        let switching = match ctl.switching {
            SwitchingSpec::Oscillating { frequency } => SwitchingFunction::oscillating(frequency)?,
            SwitchingSpec::SineOscillating { frequency } => {
                SwitchingFunction::sine_oscillating(frequency)?
            }
        };
        let controller = ControllerConfig::new(
            r,
            m,
            FunnelFunction::new(ctl.horizon, ctl.c)?,
            gain,
            switching,
        )?;

        let reference: Box<dyn ReferenceTrajectory> = match &self.reference {
            ReferenceSpec::Docking { start } => Box::new(DockingReference::new(
                start.clone().unwrap_or_else(|| x0[..m].to_vec()),
                ctl.horizon,
            )?),
            ReferenceSpec::Sinusoid {
                offset,
                amplitude,
                frequency,
                phase,
            } => Box::new(Sinusoid::new(
                offset.clone(),
                amplitude.clone(),
                frequency.clone(),
                phase.clone().unwrap_or_else(|| vec![0.0; m]),
            )?),
            ReferenceSpec::Constant { value } => Box::new(Constant {
                value: value.clone(),
            }),
        };

        let solver = self.solver.to_config();
        solver.validate()?;
        Ok(Built {
            model,
            controller,
            reference,
            solver,
        })
    }

    pub fn trace_file(&self) -> PathBuf {
        self.output
            .trace
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)))
    }

    pub fn report_file(&self) -> PathBuf {
        self.output
            .report
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.report", self.name)))
    }
}

//! The funnel feedback law: error cascade, gains and input.

mod cascade;
mod config;

pub use cascade::{
    build_cascade, check_initial_feasibility, control, error_derivatives, gamma_jet, tune_c,
    CascadeState, ErrorDerivatives, FeasibilityReport, ReferenceSample, ScaleGrid,
};
pub use config::ControllerConfig;

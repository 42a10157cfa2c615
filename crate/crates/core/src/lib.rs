//! Funnel control with exact output tracking at a prescribed final time.
//!
//! The controller keeps the tracking error `e = y - y_ref` of a system of
//! relative degree `r` inside the funnel `phi(t) |e(t)| < 1` with
//! `phi(t) = 1 / (c (T - t))`, so the error and its first `r - 1`
//! derivatives vanish as `t -> T`.
//!
//! * [`signals`]: funnel, gain and switching functions, Taylor jets.
//! * [`controller`]: the error cascade and feedback law.
//! * [`systems`]: system models, memory operators, references, the
//!   Clohessy-Wiltshire rendezvous model.
//! * [`integrator`]: adaptive Runge-Kutta integration up to `T - eps/c`.
//! * [`monitor`]: post-run verification of a trace.
//! * [`cli`]: scenario files, CSV traces and reports.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod controller;
pub mod error;
pub mod integrator;
pub(crate) mod linalg;
pub mod monitor;
pub mod signals;
pub mod systems;
pub mod time;

pub use error::{Error, Result};
pub use time::TimePoint;

//! Adaptive Dormand-Prince integration of the closed loop up to
//! `t_max = T - eps / c`, with dense output for history lookups.

mod closed_loop;
mod solver;

pub use closed_loop::{dense_eval, simulate, SimulationFailure, Trace, TraceRecord};
pub use solver::{
    solve, DenseStep, Dynamics, History, OdeFn, Record, Solution, SolveFailure, SolverConfig,
    SolverStats,
};

//! Plant models, memory operators and reference trajectories.

mod cw;
mod model;
mod operator;
mod reference;

pub use cw::{ClohessyWiltshireModel, EARTH_MU, EARTH_RADIUS, ISS_ALTITUDE};
pub use model::{Disturbance, InitialHistory, Nonlinearity, SystemModel};
pub use operator::{Delay, Fading, FnTrajectory, Memoryless, Operator, Trajectory};
pub use reference::{docking_reference, Constant, DockingReference, ReferenceTrajectory, Sinusoid};

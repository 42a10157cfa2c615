//! Clohessy-Wiltshire relative motion of a chaser about a target on a
//! circular orbit, in Hill's local-vertical-local-horizontal frame.
//!
//! `zeta = (x, y, z)`: radial, along-track and cross-track offsets (m).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::systems::model::{Disturbance, InitialHistory, SystemModel};
use crate::systems::operator::Memoryless;

/// Standard gravitational parameter of the earth (m^3/s^2).
pub const EARTH_MU: f64 = 3.986e14;
/// Earth radius (m).
pub const EARTH_RADIUS: f64 = 6_378_137.0;
/// Target altitude used for the ISS-like docking run (m).
pub const ISS_ALTITUDE: f64 = 415_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClohessyWiltshireModel {
    pub mu: f64,
    pub earth_radius: f64,
    pub altitude: f64,
}

impl Default for ClohessyWiltshireModel {
    fn default() -> Self {
        Self {
            mu: EARTH_MU,
            earth_radius: EARTH_RADIUS,
            altitude: ISS_ALTITUDE,
        }
    }
}

impl ClohessyWiltshireModel {
    pub fn new(mu: f64, earth_radius: f64, altitude: f64) -> Result<Self> {
        if !(mu > 0.0 && earth_radius > 0.0 && altitude >= 0.0) {
            return Err(Error::config(
                "CW model needs mu > 0, r_e > 0 and altitude >= 0",
            ));
        }
        Ok(Self {
            mu,
            earth_radius,
            altitude,
        })
    }

    pub fn at_altitude(altitude: f64) -> Result<Self> {
        Self::new(EARTH_MU, EARTH_RADIUS, altitude)
    }

    /// Orbital rate `sqrt(mu / (r_e + r_s)^3)` (1/s).
    pub fn omega(&self) -> f64 {
        (self.mu / (self.earth_radius + self.altitude).powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega()
    }

    /// Relative acceleration for position `zeta`, velocity `dzeta` and thrust `u`.
    pub fn acceleration(&self, zeta: &[f64], dzeta: &[f64], u: &[f64]) -> [f64; 3] {
        let w = self.omega();
        Self::acceleration_with_rate(w, zeta, dzeta, u)
    }

    fn acceleration_with_rate(w: f64, zeta: &[f64], dzeta: &[f64], u: &[f64]) -> [f64; 3] {
        [
            3.0 * w * w * zeta[0] + 2.0 * w * dzeta[1] + u[0],
            -2.0 * w * dzeta[0] + u[1],
            -w * w * zeta[2] + u[2],
        ]
    }

    /// Relative-degree-two system with `m = 3`; the operator passes the
    /// stacked state `(zeta, dzeta)` through unchanged.
    pub fn system_model(&self, x0: Vec<f64>) -> Result<SystemModel> {
        let w = self.omega();
        SystemModel::new(
            "clohessy_wiltshire",
            2,
            3,
            Arc::new(move |_, state, u| {
                Self::acceleration_with_rate(w, &state[..3], &state[3..], u).to_vec()
            }),
            Disturbance::zero(1),
            Box::new(Memoryless::identity(6)),
            InitialHistory::Constant(x0),
        )
    }
}

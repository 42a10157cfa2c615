//! Funnel, gain and switching functions, and the jet arithmetic used to
//! differentiate the controller's internal signals.

mod funnel;
mod gain;
mod jet;
mod switching;

pub use funnel::FunnelFunction;
pub use gain::{GainDerivatives, GainFunction, GainShape};
pub use jet::Jet;
pub use switching::SwitchingFunction;

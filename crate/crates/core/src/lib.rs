//! Outage analysis and time/bandwidth allocation for energy-harvesting UAV
//! identification networks.
//!
//! UAVs harvest RF energy from their ground control station during a
//! power-transfer phase, then send identification data to a multi-antenna
//! ground receiver over FDMA sub-bands. The crate provides the channel model,
//! closed-form and Monte-Carlo outage probabilities, four allocation
//! strategies, and the sweep runners that compare them.

pub mod allocation;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod outage;
pub mod specfun;

pub use error::{Error, Result};

//! Simulation of hierarchical-RL human agents that pursue activities and
//! adjust temperature and humidity in a home run by a Q-learning smart home
//! agent.

// Validation compares as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comfort;
pub mod error;
pub mod experiments;
pub mod hrl;
pub mod human;
pub mod shs;
pub mod sim;
pub mod store;
pub mod thermo;

pub use error::{Error, Result};

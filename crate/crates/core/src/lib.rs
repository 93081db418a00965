//! UAV-assisted fog computing: task assignment with a particle swarm,
//! obstacle-aware trajectories with an ant colony, and the choice of the slot
//! at which the UAV stops and transmits.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aco;
pub mod assign;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod model;
pub mod plot;
pub mod report;
pub mod seeds;
pub mod stats;
pub mod tdo;
pub mod trajectory;
pub mod workload;

pub use error::{Error, Result};

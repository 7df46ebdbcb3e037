//! Data-enabled predictive traffic engineering.
//!
//! The crate simulates a routed network under synthetic, time-varying
//! traffic and compares routing controllers on delay and route-change
//! metrics. The main controller ([`controller::DeepTeController`]) never
//! observes the traffic matrix: it adapts elephant-flow split ratios from
//! historical (routing, link load) samples collected under small routing
//! perturbations.

pub mod baselines;
pub mod controller;
pub mod delay;
pub mod error;
pub mod net;
pub mod predictor;
pub mod sim;
pub mod solver;
pub mod topologies;
pub mod traffic;

pub use error::{Error, Result};

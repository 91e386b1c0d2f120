//! Simulation and threshold analysis for a stochastic human-rodent epidemic
//! model driven by Brownian noise and self-exciting (Hawkes) jumps.
//!
//! - [`hawkes`]: exponential-kernel Hawkes channels, exact simulation,
//!   compensators and closed-form moments.
//! - [`model`]: parameters, the reproduction number and persistence constants.
//! - [`simulator`]: jump-adapted Euler–Maruyama paths and seeded ensembles.
//! - [`analysis`]: time averages, extinction slopes, persistence checks,
//!   law-of-large-numbers validation and R0 grid scans.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod hawkes;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod simulator;

pub use analysis::{GridScan, ScanAxis, ScanParam, TimeSeries};
pub use error::{Error, Result};
pub use hawkes::{EventLog, HawkesChannel, MarkDistribution};
pub use model::{Compartment, ModelParams, R0Breakdown, StructuralBounds, ThresholdReport};
pub use simulator::{Ensemble, PathRecord, SimConfig, State};

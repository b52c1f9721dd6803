//! Simulation of a four-core fiber core-selective switch: a four-path
//! Mach-Zehnder fabric built from two 4x4 splitters, with phase-drift
//! impairments, a perturb-and-observe stabilization controller, an OOK
//! transceiver model, and scenario drivers for the command line tool.

pub mod ber;
pub mod controller;
pub mod drift;
pub mod error;
pub mod field;
pub mod metrics;
pub mod prbs;
pub mod scenario;

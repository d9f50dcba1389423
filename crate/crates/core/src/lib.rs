//! Agent-based land-use simulation in which land managers' switches between
//! conservation, medium- and high-intensity management are gated by a
//! behavioural giving-in threshold built from environmental attitudes,
//! descriptive social norms and behavioural inertia.
//!
//! The crate is organised bottom-up:
//!
//! * [`landscape`]: grid, capital fields, agent functional types, production
//! * [`network`]: Moore lattice plus random teleconnections
//! * [`behaviour`]: attitude, norm and inertia terms and the logistic threshold
//! * [`dynamics`]: the competition loop, stopping rule and attitude schedules
//! * [`metrics`]: shares, supplies, patches and effective mesh size
//! * [`sensitivity`]: Saltelli sampling and Sobol index estimation
//! * [`experiment`]: configuration files, run orchestration, CSV/JSON output and the CLI
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod behaviour;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod landscape;
pub mod metrics;
pub mod network;
pub mod rng;
pub mod sensitivity;

pub use error::{Error, Result};

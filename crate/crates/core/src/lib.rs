//! Shock propagation through the multilayer network of food trade and
//! production.
//!
//! The crate is organised the way data flows through it:
//!
//! * [`tables`] loads, validates and synthesises supply, use and demand
//!   tables together with the entity [`Registry`](tables::Registry).
//! * [`calibration`] turns the tables into a [`CalibratedModel`]: trade
//!   layers, allocation shares, input splits, process coefficients and the
//!   initial state.
//! * [`engine`] compiles a model into sparse form and iterates the
//!   production → trade → allocation dynamics for baseline and shocked
//!   scenarios.
//! * [`analysis`] derives relative losses, full shock sweeps, exposure
//!   profiles, within/cross-layer decompositions, reexport shares and
//!   per-layer network metrics.

pub mod analysis;
pub mod calibration;
pub mod engine;
mod error;
pub mod format;
pub mod parallel;
pub mod tables;

pub use calibration::{CalibratedModel, CalibrationMode};
pub use engine::{Engine, ShockSpec, Trajectory, TrajectoryMode};
pub use error::{Error, Result};
pub use parallel::Parallelism;
pub use tables::{CountryId, ProcessId, ProductId, PurposeId, Registry, SupplyUseTables};

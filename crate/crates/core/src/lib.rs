//! Capacity workbench for cooperative vehicular networks on a
//! bi-directional highway: closed-form capacity results for the
//! V2I/V2V cooperative dissemination strategy, and a slot-stepped
//! Monte-Carlo simulator that reproduces them independently.
//!
//! - [`highway`]: road/vehicle model with stationary Poisson traffic on
//!   a ring.
//! - [`analytic`]: per-cycle rates, transmitter-gap distributions and
//!   the closed-form total/directional capacity.
//! - [`scheduler`]: greedy simultaneous helper-VoI pair selection plus
//!   an exhaustive optimality oracle.
//! - [`simulator`]: the full cooperative strategy simulated slot by
//!   slot with per-direction accounting.

pub mod analytic;
pub mod error;
pub mod highway;
pub mod scheduler;
pub mod simulator;

pub use error::{Error, Result};
pub use highway::{
    CycleGeometry, Direction, NetworkParams, ParamsBuilder, Role, Snapshot, Span, Vehicle,
};

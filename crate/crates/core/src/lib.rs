//! Simulator and analytical cost model for a tiled bulk-synchronous-parallel
//! machine whose processors are joined by a ladder-shaped link network.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] builds the machine graph, maps device and DNC identifiers,
//!   routes between processors and classifies tile pairs.
//! * [`cost_model`] turns routed transfers into latency and bandwidth using
//!   calibrated per-link-class constants, and models local memory and host
//!   connectivity.
//! * [`bsp_engine`] executes supersteps (compute, exchange, barrier) and
//!   produces timed traces.
//! * [`collectives`] plans and predicts broadcast, gather, scatter,
//!   all-to-all and reduce operations.
//! * [`roofline`] gives theoretical compute and memory ceilings.
//! * [`harness`] replays the reference experiments against golden data.

pub mod bsp_engine;
pub mod collectives;
pub mod cost_model;
mod error;
pub mod harness;
pub mod roofline;
pub mod topology;
pub mod units;

pub use bsp_engine::{run_program, run_superstep, Message, Superstep, SuperstepTrace};
pub use cost_model::CostParams;
pub use error::{Error, Result};
pub use topology::{TileId, Topology, TopologySpec};
pub use units::Time;

/// Shipped reference topology description.
pub const REFERENCE_TOPOLOGY: &str = include_str!("../assets/topology.toml");
/// Shipped calibrated cost constants.
pub const REFERENCE_COSTS: &str = include_str!("../assets/costs.toml");

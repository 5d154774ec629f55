//! Agent-based pedestrian evacuation on a patch grid.
//!
//! Three behaviours are modelled: shortest-route walkers, random followers,
//! and agents that each tick pick the neighbouring patch maximising distance
//! utility plus a binomial prediction of how comfortable the patch will be.
//! The [`harness`] module runs replicated parameter sweeps over the engine.

pub mod behaviors;
pub mod config;
pub mod engine;
pub mod error;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod plan;
pub mod summary;
pub mod utilities;

pub use config::{MovingPattern, SimConfig};
pub use engine::{run_to_completion, Simulation, WorldState};
pub use error::{EvacError, Result};
pub use grid::{ExitSide, GridSpec, Patch, PatchField};
pub use metrics::RunRecord;

//! Deterministic 3-D AESA radar search-and-track simulation.
//!
//! An observer at the origin steers a pencil beam over a discrete grid of
//! bearings. Each step the beam is scored against a diffusing scan-history
//! field, constant-velocity targets are sensed in spherical coordinates and
//! an unscented multi-target tracker maintains the track list that, with a
//! raster of the scan field, forms the agent's observation.

pub mod action;
pub mod config;
pub mod dataset;
pub mod env;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod mtt;
pub mod observation;
pub mod policy;
pub mod rewards;
pub mod rng;
pub mod scan_history;
pub mod sim;
pub mod trace;
pub mod wire;

pub use action::{ActionGrid, BeamAction};
pub use config::EpisodeConfig;
pub use env::{run_episode, Environment, StepInfo, StepOutcome};
pub use error::{Error, Result};
pub use observation::Observation;
pub use policy::{Policy, PolicyKind};
pub use rewards::RewardBreakdown;
pub use trace::EpisodeTrace;

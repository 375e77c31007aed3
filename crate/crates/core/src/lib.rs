//! Decentralized coverage and tracking of a spreading wildfire by a swarm of
//! camera-equipped aerial agents.
//!
//! The crate is organized bottom-up:
//!
//! - [`fire`]: front propagation under stochastic wind and the Gaussian heat
//!   field radiated by the accumulated fire-front sources.
//! - [`sensing`]: downward camera footprint, per-pixel cost, joint multi-camera
//!   cost and the importance weighting of fire points.
//! - [`coverage`]: the global coverage objective and each agent's local
//!   gradient of it, driving the desired virtual position.
//! - [`potential`]: attractive/repulsive potential-field control and the
//!   single-integrator position update.
//! - [`swarm`]: the synchronous, locality-constrained per-agent step loop.
//! - [`harness`]: scenario configuration, metrics, CSV/SVG output and the
//!   scenario runner used by the CLI.

pub mod coverage;
pub mod fire;
pub mod format;
pub mod geometry;
pub mod harness;
pub mod potential;
pub mod sensing;
pub mod swarm;

pub use coverage::{ControllerGains, GradientResult};
pub use fire::{FireField, FireFrontSource, FireState, IntensityField, SpreadParams, WindModel};
pub use geometry::{Rect, Vec2, Vec3};
pub use harness::config::ScenarioConfig;
pub use harness::metrics::MetricsRecord;
pub use potential::{AttractGains, SafetyParams};
pub use sensing::{CameraIntrinsics, FovRect, ImportanceMode, Pose};
pub use swarm::{AgentParams, AgentState, WorldState};

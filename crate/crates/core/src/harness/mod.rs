//! Scenario configuration, execution, metrics and rendered output.

pub mod config;
pub mod metrics;
pub mod render;
pub mod run;

//! Scenario files: TOML with one table per parameter group.
//!
//! Every key is required unless it has a documented default; unknown keys
//! are rejected. Validation errors name the offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{ControllerGains, Discretization};
use crate::fire::{SpreadParams, SpreadPolicy, WindModel};
use crate::geometry::{Rect, Vec2, Vec3};
use crate::potential::{AttractGains, SafetyParams};
use crate::sensing::{CameraIntrinsics, ImportanceMode};
use crate::swarm::AgentParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run: RunConfig,
    pub agents: AgentsConfig,
    pub fire: FireConfig,
    pub wind: WindConfig,
    pub camera: CameraConfig,
    pub coverage: CoverageConfig,
    pub safety: SafetyParams,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub steps: u64,
    /// Duration of one control step.
    pub dt: f64,
    pub seed: u64,
    /// Steps between snapshots; zero writes only the initial one.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
    /// Ground area drawn in snapshots, `[x_min, y_min, x_max, y_max]`.
    pub snapshot_extent: [f64; 4],
    #[serde(default = "default_snapshot_resolution")]
    pub snapshot_resolution: f64,
}

fn default_snapshot_every() -> u64 {
    1000
}

fn default_snapshot_resolution() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    pub count: usize,
    pub center: [f64; 2],
    /// Agents start uniformly inside a disk of this radius.
    pub jitter_radius: f64,
    #[serde(default)]
    pub initial_altitude: f64,
    pub rendezvous: [f64; 3],
    pub comm_radius: f64,
    /// Highest altitude the communication radius must account for.
    pub max_altitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FireConfig {
    pub seed_count: usize,
    pub center: [f64; 2],
    pub seed_radius: f64,
    pub sigma: [f64; 2],
    pub spread_rate: f64,
    /// Duration of one fire step.
    #[serde(default = "one")]
    pub spread_dt: f64,
    /// Control steps per fire step; zero freezes the fire.
    pub fire_step_every: u64,
    #[serde(default)]
    pub min_front_separation: f64,
    #[serde(default)]
    pub wind_shared: bool,
    /// Node spacing of the heat raster agents sample; zero samples exactly.
    #[serde(default)]
    pub raster_spacing: f64,
    /// Extent of the heat raster, `[x_min, y_min, x_max, y_max]`.
    #[serde(default)]
    pub raster_extent: Option<[f64; 4]>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindConfig {
    /// Radians clockwise from north.
    pub mean_direction: f64,
    pub std_direction: f64,
    pub mean_speed: f64,
    pub std_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub focal_length: f64,
    pub pixel_area: f64,
    /// `[θ1, θ2]` in degrees.
    pub half_angles_deg: [f64; 2],
    pub intensity_min: f64,
    pub intensity_max: f64,
    pub importance_gain: f64,
    pub regularizer: f64,
    #[serde(default)]
    pub importance_mode: ImportanceMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    pub lateral_gain: f64,
    pub vertical_gain: f64,
    #[serde(default)]
    pub gradient_clip: Option<f64>,
    #[serde(default = "default_interior_cells")]
    pub interior_cells: usize,
    #[serde(default = "default_edge_points")]
    pub edge_points: usize,
}

fn default_interior_cells() -> usize {
    crate::sensing::DEFAULT_INTERIOR_CELLS
}

fn default_edge_points() -> usize {
    crate::sensing::DEFAULT_EDGE_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub rendezvous_gain: f64,
    pub desired_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Cell side of the grid the objective and coverage fraction use.
    pub cell_size: f64,
    /// Fire support padding, in source deviations.
    pub pad_sigmas: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            cell_size: 2.0,
            pad_sigmas: 4.0,
        }
    }
}

fn rect(key: &str, r: [f64; 4]) -> Result<Rect, ConfigError> {
    let rect = Rect::new(r[0], r[1], r[2], r[3]);
    rect.validate().map_err(|e| invalid(key, e.to_string()))?;
    Ok(rect)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and >= 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("run.dt", self.run.dt)?;
        positive("run.snapshot_resolution", self.run.snapshot_resolution)?;
        rect("run.snapshot_extent", self.run.snapshot_extent)?;

        let a = &self.agents;
        non_negative("agents.jitter_radius", a.jitter_radius)?;
        non_negative("agents.initial_altitude", a.initial_altitude)?;
        non_negative("agents.comm_radius", a.comm_radius)?;
        positive("agents.max_altitude", a.max_altitude)?;
        if a.rendezvous.iter().chain(&a.center).any(|v| !v.is_finite()) {
            return Err(invalid("agents.rendezvous", "coordinates must be finite"));
        }

        let f = &self.fire;
        if f.seed_count == 0 {
            return Err(invalid("fire.seed_count", "at least one seed source is required"));
        }
        non_negative("fire.seed_radius", f.seed_radius)?;
        positive("fire.sigma", f.sigma[0])?;
        positive("fire.sigma", f.sigma[1])?;
        non_negative("fire.spread_rate", f.spread_rate)?;
        positive("fire.spread_dt", f.spread_dt)?;
        non_negative("fire.min_front_separation", f.min_front_separation)?;
        non_negative("fire.raster_spacing", f.raster_spacing)?;
        if f.raster_spacing > 0.0 {
            let extent = f
                .raster_extent
                .ok_or_else(|| invalid("fire.raster_extent", "required when raster_spacing > 0"))?;
            rect("fire.raster_extent", extent)?;
        }

        let w = &self.wind;
        non_negative("wind.std_direction", w.std_direction)?;
        non_negative("wind.std_speed", w.std_speed)?;
        if !w.mean_direction.is_finite() {
            return Err(invalid("wind.mean_direction", "must be finite"));
        }
        non_negative("wind.mean_speed", w.mean_speed)?;

        self.camera().validate().map_err(|e| match e {
            crate::sensing::SensingError::InvalidCamera { name, reason } => {
                invalid(&format!("camera.{name}"), reason)
            }
            other => invalid("camera", other.to_string()),
        })?;

        let c = &self.coverage;
        non_negative("coverage.lateral_gain", c.lateral_gain)?;
        non_negative("coverage.vertical_gain", c.vertical_gain)?;
        if let Some(clip) = c.gradient_clip {
            positive("coverage.gradient_clip", clip)?;
        }
        if c.interior_cells < 4 {
            return Err(invalid("coverage.interior_cells", "must be >= 4"));
        }
        if c.edge_points == 0 {
            return Err(invalid("coverage.edge_points", "must be >= 1"));
        }

        let s = &self.safety;
        positive("safety.safe_distance", s.safe_distance)?;
        positive("safety.min_altitude", s.min_altitude)?;
        positive("safety.neighbor_gain", s.neighbor_gain)?;
        positive("safety.ground_gain", s.ground_gain)?;
        if let Some(v) = s.max_speed {
            positive("safety.max_speed", v)?;
        }
        if s.min_altitude <= self.camera.focal_length {
            return Err(invalid(
                "safety.min_altitude",
                format!(
                    "must exceed camera.focal_length ({}), got {}",
                    self.camera.focal_length, s.min_altitude
                ),
            ));
        }

        non_negative("potential.rendezvous_gain", self.potential.rendezvous_gain)?;
        non_negative("potential.desired_gain", self.potential.desired_gain)?;

        let tan = self.camera().tan_half_angles();
        let overlap_span = 4.0 * a.max_altitude * tan.x.max(tan.y);
        if a.comm_radius < overlap_span {
            return Err(invalid(
                "agents.comm_radius",
                format!(
                    "must be at least 4·max_altitude·max tanθ = {overlap_span:.3} so every footprint overlap is visible"
                ),
            ));
        }

        positive("metrics.cell_size", self.metrics.cell_size)?;
        positive("metrics.pad_sigmas", self.metrics.pad_sigmas)?;
        Ok(())
    }

    pub fn camera(&self) -> CameraIntrinsics {
        let c = &self.camera;
        CameraIntrinsics {
            focal_length: c.focal_length,
            pixel_area: c.pixel_area,
            half_angles: c.half_angles_deg.map(f64::to_radians),
            intensity_min: c.intensity_min,
            intensity_max: c.intensity_max,
            importance_gain: c.importance_gain,
            regularizer: c.regularizer,
            importance_mode: c.importance_mode,
        }
    }

    pub fn wind(&self) -> WindModel {
        let w = &self.wind;
        WindModel {
            mean_direction: w.mean_direction,
            std_direction: w.std_direction,
            mean_speed: w.mean_speed,
            std_speed: w.std_speed,
        }
    }

    pub fn spread(&self) -> SpreadParams {
        SpreadParams {
            rate: self.fire.spread_rate,
            dt: self.fire.spread_dt,
        }
    }

    pub fn spread_policy(&self) -> SpreadPolicy {
        SpreadPolicy {
            min_front_separation: self.fire.min_front_separation,
            wind_shared: self.fire.wind_shared,
        }
    }

    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            gains: ControllerGains {
                lateral_gain: self.coverage.lateral_gain,
                vertical_gain: self.coverage.vertical_gain,
                dt: self.run.dt,
                gradient_clip: self.coverage.gradient_clip,
            },
            attract: AttractGains {
                rendezvous_gain: self.potential.rendezvous_gain,
                desired_gain: self.potential.desired_gain,
                rendezvous: Vec3::from(self.agents.rendezvous),
                dt: self.run.dt,
            },
            safety: self.safety,
            cam: self.camera(),
            discretization: Discretization {
                interior_cells: self.coverage.interior_cells,
                edge_points: self.coverage.edge_points,
            },
        }
    }

    pub fn snapshot_extent(&self) -> Rect {
        let e = self.run.snapshot_extent;
        Rect::new(e[0], e[1], e[2], e[3])
    }

    pub fn fire_center(&self) -> Vec2 {
        Vec2::from(self.fire.center)
    }
}

/// The bundled scenario reproducing the border-focus experiment.
pub const BORDER_FOCUS: &str = include_str!("../../scenarios/scenario_border_focus.toml");
/// The bundled scenario reproducing the uniform-importance experiment.
pub const UNIFORM: &str = include_str!("../../scenarios/scenario_uniform.toml");

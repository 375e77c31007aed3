//! Scenario execution and artifact output.

use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::config::ScenarioConfig;
use super::metrics::{MetricsProbe, MetricsRecord, METRICS_HEADER};
use super::render::{render_svg, WorldSnapshot};
use crate::fire::{FireError, FireField, FireState, HeatRaster};
use crate::format::sig9;
use crate::geometry::{Rect, Vec2};
use crate::sensing::{CameraIntrinsics, Pose};
use crate::swarm::{AgentState, SwarmError, WorldState};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("building the world: {0}")]
    Fire(#[from] FireError),
    #[error("building the world: {0}")]
    Swarm(#[from] SwarmError),
    #[error("agent {agent} has a non-finite pose at step {step}")]
    NonFinite { step: u64, agent: usize },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Builds the initial world: agents jittered around the launch point, fire
/// seeded around its center, both from `seed`.
pub fn build_world(cfg: &ScenarioConfig, seed: u64) -> Result<WorldState, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = &cfg.agents;
    let params = cfg.agent_params();
    let center = Vec2::from(a.center);
    let agents = (0..a.count)
        .map(|id| {
            let r = a.jitter_radius * rng.random::<f64>().sqrt();
            let t = TAU * rng.random::<f64>();
            let p = center + Vec2::new(r * t.cos(), r * t.sin());
            AgentState::new(id, Pose::new(p.x, p.y, a.initial_altitude), params)
        })
        .collect();
    let f = &cfg.fire;
    let state = FireState::seeded(
        f.seed_count,
        cfg.fire_center(),
        f.seed_radius,
        Vec2::from(f.sigma),
        cfg.wind(),
        cfg.spread(),
        cfg.spread_policy(),
        &mut rng,
    )?;
    let field = match f.raster_extent {
        Some(e) if f.raster_spacing > 0.0 => {
            let extent = Rect::new(e[0], e[1], e[2], e[3]);
            let raster = HeatRaster::new(extent, f.raster_spacing, 8.0).map_err(FireError::from)?;
            FireField::rasterized(state, raster)
        }
        _ => FireField::exact(state),
    };
    let fire_seed = rng.random::<u64>();
    Ok(WorldState::new(
        agents,
        field,
        a.comm_radius,
        f.fire_step_every,
        fire_seed,
    )?)
}

/// A world plus its metrics probe, stepped one control step at a time.
pub struct Simulation {
    pub world: WorldState,
    camera: CameraIntrinsics,
    probe: MetricsProbe,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self, RunError> {
        Ok(Self {
            world: build_world(cfg, seed)?,
            camera: cfg.camera(),
            probe: MetricsProbe::new(cfg.metrics.cell_size, cfg.metrics.pad_sigmas),
        })
    }

    /// Metrics of the current world with no step taken yet.
    pub fn initial_metrics(&mut self) -> MetricsRecord {
        self.probe.record(&self.world, &self.camera, 0, 0)
    }

    pub fn step(&mut self) -> Result<MetricsRecord, RunError> {
        let report = self.world.step();
        if let Some(a) = self
            .world
            .agents
            .iter()
            .find(|a| !(a.pose.position().iter().all(|v| v.is_finite())))
        {
            return Err(RunError::NonFinite {
                step: self.world.step,
                agent: a.id,
            });
        }
        Ok(self
            .probe
            .record(&self.world, &self.camera, report.aborted, report.zeta_flips))
    }
}

pub const TRAJECTORY_HEADER: &str = "step,agent_id,x,y,z,zeta,desired_x,desired_y,desired_z";

pub fn write_trajectory_rows<W: Write>(out: &mut W, world: &WorldState) -> io::Result<()> {
    for a in &world.agents {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            world.step,
            a.id,
            sig9(a.pose.lateral.x),
            sig9(a.pose.lateral.y),
            sig9(a.pose.altitude),
            u8::from(a.zeta),
            sig9(a.desired.lateral.x),
            sig9(a.desired.lateral.y),
            sig9(a.desired.altitude)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub quiet: bool,
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub last: MetricsRecord,
    pub snapshots: Vec<u64>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_snapshot(dir: &Path, cfg: &ScenarioConfig, world: &WorldState) -> Result<(), RunError> {
    let snap = WorldSnapshot::capture(
        world,
        cfg.camera(),
        cfg.snapshot_extent(),
        cfg.run.snapshot_resolution,
    );
    let stem = format!("snapshot_{:06}", world.step);

    let json = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string(&snap).expect("snapshots always serialize");
    fs::write(&json, text).map_err(io_err(&json))?;

    let svg = dir.join(format!("{stem}.svg"));
    fs::write(&svg, render_svg(&snap)).map_err(io_err(&svg))?;

    let csv = dir.join(format!("{stem}_intensity.csv"));
    let raster = snap.fire.intensity_grid(snap.extent, snap.resolution)?;
    let mut out = create(&csv)?;
    raster.write_csv(&mut out).map_err(io_err(&csv))?;
    out.flush().map_err(io_err(&csv))
}

/// Runs the scenario and writes `trajectories.csv`, `metrics.csv` and the
/// snapshots into `out_dir`.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path, opts: RunOptions) -> Result<RunSummary, RunError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let traj_path = out_dir.join("trajectories.csv");
    let metrics_path = out_dir.join("metrics.csv");
    let mut traj = create(&traj_path)?;
    let mut metrics = create(&metrics_path)?;

    let mut sim = Simulation::new(cfg, cfg.run.seed)?;
    writeln!(traj, "{TRAJECTORY_HEADER}").map_err(io_err(&traj_path))?;
    writeln!(metrics, "{METRICS_HEADER}").map_err(io_err(&metrics_path))?;
    write_trajectory_rows(&mut traj, &sim.world).map_err(io_err(&traj_path))?;
    let mut last = sim.initial_metrics();
    last.write_row(&mut metrics).map_err(io_err(&metrics_path))?;
    write_snapshot(out_dir, cfg, &sim.world)?;
    let mut snapshots = vec![0];

    let every = cfg.run.snapshot_every;
    let progress_every = (cfg.run.steps / 20).max(1);
    for _ in 0..cfg.run.steps {
        last = sim.step()?;
        write_trajectory_rows(&mut traj, &sim.world).map_err(io_err(&traj_path))?;
        last.write_row(&mut metrics).map_err(io_err(&metrics_path))?;
        let step = sim.world.step;
        if every > 0 && step % every == 0 {
            write_snapshot(out_dir, cfg, &sim.world)?;
            snapshots.push(step);
        }
        if !opts.quiet && step % progress_every == 0 {
            log::info!(
                "step {step}: H={} tracking={} min_dist={:.2} min_z={:.2}",
                sig9(last.objective_h),
                last.zeta_count,
                last.min_pairwise_distance,
                last.min_altitude
            );
        }
    }
    traj.flush().map_err(io_err(&traj_path))?;
    metrics.flush().map_err(io_err(&metrics_path))?;
    Ok(RunSummary {
        steps: cfg.run.steps,
        last,
        snapshots,
    })
}

//! Per-step global diagnostics.

use std::io::{self, Write};

use crate::coverage::{fire_cells, footprints, objective_over_cells, FireCell, GridSpec};
use crate::fire::IntensityField;
use crate::format::sig9;
use crate::geometry::Vec3;
use crate::sensing::{CameraIntrinsics, Pose};
use crate::swarm::WorldState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub step: u64,
    pub objective_h: f64,
    /// `+∞` with fewer than two agents.
    pub min_pairwise_distance: f64,
    pub min_altitude: f64,
    pub covered_fire_fraction: f64,
    pub mean_agent_position: Vec3,
    pub altitude_std: f64,
    pub zeta_count: usize,
    pub aborted_agent_steps: usize,
    pub zeta_flips: usize,
}

pub const METRICS_HEADER: &str = "step,objective_H,min_pairwise_distance,min_altitude,covered_fire_fraction,mean_x,mean_y,mean_z,altitude_std,zeta_count,aborted_agent_steps,zeta_flips";

impl MetricsRecord {
    pub fn write_row<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            sig9(self.objective_h),
            sig9(self.min_pairwise_distance),
            sig9(self.min_altitude),
            sig9(self.covered_fire_fraction),
            sig9(self.mean_agent_position.x),
            sig9(self.mean_agent_position.y),
            sig9(self.mean_agent_position.z),
            sig9(self.altitude_std),
            self.zeta_count,
            self.aborted_agent_steps,
            self.zeta_flips
        )
    }
}

pub fn min_pairwise_distance(poses: &[Pose]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in poses.iter().enumerate() {
        for b in &poses[i + 1..] {
            best = best.min((a.position() - b.position()).norm());
        }
    }
    best
}

/// Population standard deviation of the altitudes; zero when empty.
pub fn altitude_std(poses: &[Pose]) -> f64 {
    if poses.is_empty() {
        return 0.0;
    }
    let n = poses.len() as f64;
    let mean = poses.iter().map(|p| p.altitude).sum::<f64>() / n;
    (poses.iter().map(|p| (p.altitude - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Fire-weighted share of cells whose center lies in at least one footprint.
pub fn covered_fraction(poses: &[Pose], cells: &[FireCell], cam: &CameraIntrinsics) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    let prints = footprints(poses, cam);
    let burning: f64 = cells.iter().map(|c| c.fire_share).sum();
    let covered: f64 = cells
        .iter()
        .filter(|c| prints.iter().any(|(r, _)| r.contains(c.cell.center())))
        .map(|c| c.fire_share)
        .sum();
    covered / burning
}

/// Computes metrics rows, reusing the fire grid until the fire changes.
#[derive(Debug, Clone)]
pub struct MetricsProbe {
    cell_size: f64,
    pad_sigmas: f64,
    cached_sources: Option<usize>,
    cells: Vec<FireCell>,
}

impl MetricsProbe {
    pub fn new(cell_size: f64, pad_sigmas: f64) -> Self {
        Self {
            cell_size,
            pad_sigmas,
            cached_sources: None,
            cells: Vec::new(),
        }
    }

    pub fn fire_cells(&self) -> &[FireCell] {
        &self.cells
    }

    fn refresh<F: IntensityField + ?Sized>(
        &mut self,
        field: &F,
        sources: usize,
        grid: GridSpec,
        cam: &CameraIntrinsics,
    ) {
        if self.cached_sources != Some(sources) {
            self.cells = fire_cells(field, cam, &grid);
            self.cached_sources = Some(sources);
        }
    }

    pub fn record(
        &mut self,
        world: &WorldState,
        cam: &CameraIntrinsics,
        aborted: usize,
        zeta_flips: usize,
    ) -> MetricsRecord {
        let state = world.fire.state();
        let grid = GridSpec::with_cell_size(state.support(self.pad_sigmas), self.cell_size);
        self.refresh(&world.fire, state.sources.len(), grid, cam);
        let poses: Vec<Pose> = world.agents.iter().map(|a| a.pose).collect();
        let mean = if poses.is_empty() {
            Vec3::from_element(f64::NAN)
        } else {
            poses.iter().map(Pose::position).sum::<Vec3>() / poses.len() as f64
        };
        MetricsRecord {
            step: world.step,
            objective_h: objective_over_cells(&poses, &self.cells, cam),
            min_pairwise_distance: min_pairwise_distance(&poses),
            min_altitude: poses.iter().map(|p| p.altitude).fold(f64::INFINITY, f64::min),
            covered_fire_fraction: covered_fraction(&poses, &self.cells, cam),
            mean_agent_position: mean,
            altitude_std: altitude_std(&poses),
            zeta_count: world.agents.iter().filter(|a| a.zeta).count(),
            aborted_agent_steps: aborted,
            zeta_flips,
        }
    }
}

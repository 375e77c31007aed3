//! The synchronous per-agent loop.
//!
//! Each step reads an immutable snapshot of every pose and of the fire, lets
//! every agent sense, update its desired position and pick a velocity using
//! only its physical neighbors, then commits all new states at once.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{
    local_gradient_from_samples, sample_fov_fire, update_desired, ControllerGains, CoverageError,
    Discretization, FovFire,
};
use crate::fire::{FireField, IntensityField};
use crate::geometry::Vec3;
use crate::potential::{control, integrate, AttractGains, PotentialError, SafetyParams, Target};
use crate::sensing::{CameraIntrinsics, Pose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwarmError {
    #[error("no agent with id {0}")]
    UnknownAgent(usize),
    #[error("agent ids must be unique; {0} repeats")]
    DuplicateId(usize),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Everything an agent needs besides its own state and what it senses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub gains: ControllerGains,
    pub attract: AttractGains,
    pub safety: SafetyParams,
    pub cam: CameraIntrinsics,
    pub discretization: Discretization,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub pose: Pose,
    pub desired: Pose,
    pub zeta: bool,
    pub params: AgentParams,
}

impl AgentState {
    /// A grounded or hovering agent that has not seen fire yet.
    pub fn new(id: usize, pose: Pose, params: AgentParams) -> Self {
        Self {
            id,
            pose,
            desired: pose,
            zeta: false,
            params,
        }
    }
}

/// What an agent reads about a physical neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborView {
    pub id: usize,
    pub pose: Pose,
}

/// An agent's fire observation for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensed {
    pub zeta: bool,
    pub fire: FovFire,
}

/// Samples the footprint; `ζ` is set when any node sees fire.
pub fn sense_fire<F: IntensityField + ?Sized>(agent: &AgentState, field: &F) -> Sensed {
    let p = &agent.params;
    let fire = sample_fov_fire(&agent.pose, field, &p.cam, &p.discretization);
    Sensed {
        zeta: !fire.is_empty(),
        fire,
    }
}

/// One step of one agent against a snapshot.
///
/// `neighbors` must hold physical neighbors only. Their order does not
/// matter. The desired position restarts from the current pose whenever the
/// agent regains sight of the fire.
pub fn agent_step<F: IntensityField + ?Sized>(
    agent: &AgentState,
    neighbors: &[NeighborView],
    field: &F,
) -> Result<AgentState, SwarmError> {
    let p = &agent.params;
    let mut views = neighbors.to_vec();
    views.sort_by_key(|v| v.id);
    let poses: Vec<Pose> = views.iter().map(|v| v.pose).collect();
    let positions: Vec<Vec3> = poses.iter().map(Pose::position).collect();

    let sensed = sense_fire(agent, field);
    let mut next = *agent;
    next.zeta = sensed.zeta;
    let target = if sensed.zeta {
        let start = if agent.zeta { agent.desired } else { agent.pose };
        let grad = local_gradient_from_samples(&agent.pose, &poses, &sensed.fire, &p.cam)?;
        next.desired = update_desired(&start, &grad, &p.gains);
        Target::Desired(next.desired.position())
    } else {
        Target::Rendezvous
    };
    let u = control(agent.pose.position(), target, &positions, &p.safety, &p.attract)?;
    next.pose = Pose::from_position(integrate(agent.pose.position(), u, p.attract.dt));
    Ok(next)
}

/// Agents `j ≠ i` within `radius` of `poses[i]`, closed at the boundary.
pub fn neighbors_within(poses: &[(usize, Pose)], i: usize, radius: f64) -> Vec<NeighborView> {
    let me = poses[i].1.position();
    poses
        .iter()
        .enumerate()
        .filter(|&(j, (_, p))| j != i && (p.position() - me).norm() <= radius)
        .map(|(_, &(id, pose))| NeighborView { id, pose })
        .collect()
}

/// Result of one committed world step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// Agents whose step was aborted on a singularity; they held position.
    pub aborted: usize,
    /// Agents whose `ζ` changed.
    pub zeta_flips: usize,
    /// Sources spawned by a fire step, if one ran.
    pub fire_spawned: usize,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub agents: Vec<AgentState>,
    pub fire: FireField,
    pub comm_radius: f64,
    /// Agent steps per fire step; zero freezes the fire.
    pub fire_step_every: u64,
    pub step: u64,
    fire_rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(
        agents: Vec<AgentState>,
        fire: FireField,
        comm_radius: f64,
        fire_step_every: u64,
        fire_seed: u64,
    ) -> Result<Self, SwarmError> {
        let mut ids: Vec<usize> = agents.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(SwarmError::DuplicateId(w[0]));
        }
        Ok(Self {
            agents,
            fire,
            comm_radius,
            fire_step_every,
            step: 0,
            fire_rng: ChaCha8Rng::seed_from_u64(fire_seed),
        })
    }

    fn snapshot(&self) -> Vec<(usize, Pose)> {
        self.agents.iter().map(|a| (a.id, a.pose)).collect()
    }

    pub fn physical_neighbors(&self, id: usize) -> Result<Vec<NeighborView>, SwarmError> {
        let i = self
            .agents
            .iter()
            .position(|a| a.id == id)
            .ok_or(SwarmError::UnknownAgent(id))?;
        Ok(neighbors_within(&self.snapshot(), i, self.comm_radius))
    }

    /// The states every agent would commit this step, in agent order, or the
    /// error that aborted it.
    pub fn proposals(&self) -> Vec<Result<AgentState, SwarmError>> {
        let snapshot = self.snapshot();
        let field = &self.fire;
        (0..self.agents.len())
            .into_par_iter()
            .map(|i| {
                let neighbors = neighbors_within(&snapshot, i, self.comm_radius);
                agent_step(&self.agents[i], &neighbors, field)
            })
            .collect()
    }

    /// Advances every agent against the current snapshot, commits, then
    /// steps the fire if it is due.
    pub fn step(&mut self) -> StepReport {
        let mut report = StepReport::default();
        let proposals = self.proposals();
        for (agent, next) in self.agents.iter_mut().zip(proposals) {
            match next {
                Ok(next) => {
                    report.zeta_flips += usize::from(next.zeta != agent.zeta);
                    *agent = next;
                }
                Err(err) => {
                    log::warn!("step {}: agent {} held: {err}", self.step, agent.id);
                    report.aborted += 1;
                }
            }
        }
        self.step += 1;
        if self.fire_step_every > 0 && self.step % self.fire_step_every == 0 {
            report.fire_spawned = self.fire.step(&mut self.fire_rng);
        }
        report
    }
}

//! Potential-field motion control: attraction to a target point, repulsion
//! from nearby agents and from the ground, and the single-integrator update.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("singular repulsion: agent coincides with a neighbor at {0:?}")]
    CoincidentNeighbor([f64; 3]),
    #[error("singular repulsion: agent is on the ground")]
    Grounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyParams {
    /// `d`
    pub safe_distance: f64,
    /// `z_min`
    pub min_altitude: f64,
    /// `ν`
    pub neighbor_gain: f64,
    /// `ν′`
    pub ground_gain: f64,
    /// Optional cap on the commanded speed. Explicit Euler on the singular
    /// ground kernel can otherwise fling a just-launched agent hundreds of
    /// units upward in one step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractGains {
    /// `k_r`
    pub rendezvous_gain: f64,
    /// `k_d`
    pub desired_gain: f64,
    /// `p_r`
    pub rendezvous: Vec3,
    pub dt: f64,
}

/// Pull toward `to`: `−gain·(from − to)`.
pub fn attract(to: Vec3, from: Vec3, gain: f64) -> Vec3 {
    -gain * (from - to)
}

/// Push away from `other` when closer than `threshold`.
///
/// Magnitude `gain·(1/ρ − 1/threshold)/ρ³·ρ` with `ρ` the distance, which is
/// zero at the threshold and unbounded as `ρ → 0`.
fn repel(me: Vec3, other: Vec3, threshold: f64, gain: f64) -> Option<Vec3> {
    let away = me - other;
    let rho = away.norm();
    if rho >= threshold {
        return Some(Vec3::zeros());
    }
    if rho == 0.0 {
        return None;
    }
    Some(gain * (1.0 / rho - 1.0 / threshold) / (rho * rho * rho) * away)
}

pub fn repulse_neighbors(
    me: Vec3,
    neighbors: &[Vec3],
    safety: &SafetyParams,
) -> Result<Vec3, PotentialError> {
    let mut force = Vec3::zeros();
    for &n in neighbors {
        force += repel(me, n, safety.safe_distance, safety.neighbor_gain)
            .ok_or(PotentialError::CoincidentNeighbor([n.x, n.y, n.z]))?;
    }
    Ok(force)
}

pub fn repulse_ground(me: Vec3, safety: &SafetyParams) -> Result<Vec3, PotentialError> {
    let ground = Vec3::new(me.x, me.y, 0.0);
    repel(me, ground, safety.min_altitude, safety.ground_gain).ok_or(PotentialError::Grounded)
}

/// Where the agent is headed: the rendezvous point before it sees fire, its
/// desired virtual position after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Rendezvous,
    Desired(Vec3),
}

/// Velocity command: repulsions plus attraction to the active target, scaled
/// down to `max_speed` when one is set.
///
/// An agent resting on the ground has not launched yet and feels no ground
/// repulsion; every airborne agent does.
pub fn control(
    me: Vec3,
    target: Target,
    neighbors: &[Vec3],
    safety: &SafetyParams,
    gains: &AttractGains,
) -> Result<Vec3, PotentialError> {
    let mut u = repulse_neighbors(me, neighbors, safety)?;
    if me.z > 0.0 {
        u += repulse_ground(me, safety)?;
    }
    u += match target {
        Target::Rendezvous => attract(gains.rendezvous, me, gains.rendezvous_gain),
        Target::Desired(p_d) => attract(p_d, me, gains.desired_gain),
    };
    if let Some(limit) = safety.max_speed {
        let speed = u.norm();
        if speed > limit {
            u *= limit / speed;
        }
    }
    Ok(u)
}

/// Euler step `p + u·dt` with the altitude floored at zero.
pub fn integrate(p: Vec3, u: Vec3, dt: f64) -> Vec3 {
    let mut next = p + u * dt;
    next.z = next.z.max(0.0);
    next
}

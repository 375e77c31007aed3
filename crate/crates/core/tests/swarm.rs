use firecover::coverage::{ControllerGains, Discretization};
use firecover::fire::{FireField, FireFrontSource, FireState, SpreadParams, SpreadPolicy, WindModel};
use firecover::potential::{AttractGains, SafetyParams};
use firecover::sensing::{CameraIntrinsics, ImportanceMode, Pose};
use firecover::swarm::{AgentParams, AgentState, WorldState};
use firecover::{Vec2, Vec3};
use proptest::prelude::*;

fn params() -> AgentParams {
    AgentParams {
        gains: ControllerGains {
            lateral_gain: 1e-9,
            vertical_gain: 2e-10,
            dt: 1.0,
            gradient_clip: None,
        },
        attract: AttractGains {
            rendezvous_gain: 0.06,
            desired_gain: 0.06,
            rendezvous: Vec3::new(0.0, 0.0, 40.0),
            dt: 1.0,
        },
        safety: SafetyParams {
            safe_distance: 10.0,
            min_altitude: 15.0,
            neighbor_gain: 2.1,
            ground_gain: 1e3,
            max_speed: Some(20.0),
        },
        cam: CameraIntrinsics {
            focal_length: 10.0,
            pixel_area: 1e-4,
            half_angles: [30f64.to_radians(), 45f64.to_radians()],
            intensity_min: 0.005,
            intensity_max: 0.1,
            importance_gain: 1.0,
            regularizer: 1.5e-5,
            importance_mode: ImportanceMode::BorderFocus,
        },
        discretization: Discretization {
            interior_cells: 256,
            edge_points: 32,
        },
    }
}

fn fire(points: &[(f64, f64)]) -> FireField {
    FireField::exact(
        FireState::new(
            points
                .iter()
                .map(|&(x, y)| FireFrontSource::new(Vec2::new(x, y), Vec2::new(4.0, 4.0)))
                .collect(),
            WindModel::new(0.0, 0.0, 0.0, 0.0).unwrap(),
            SpreadParams::new(1.0, 1.0).unwrap(),
            SpreadPolicy::default(),
        )
        .unwrap(),
    )
}

fn world(poses: &[(f64, f64, f64)], field: FireField, radius: f64) -> WorldState {
    let agents = poses
        .iter()
        .enumerate()
        .map(|(i, &(x, y, z))| AgentState::new(i, Pose::new(x, y, z), params()))
        .collect();
    WorldState::new(agents, field, radius, 0, 3).unwrap()
}

#[test]
fn mirrored_swarm_stays_mirrored() {
    // Fire and agents are symmetric about x = 0, so trajectories must be too.
    let mut w = world(
        &[
            (-30.0, -20.0, 0.0),
            (30.0, -20.0, 0.0),
            (-12.0, 25.0, 0.0),
            (12.0, 25.0, 0.0),
        ],
        fire(&[(-6.0, 0.0), (6.0, 0.0)]),
        200.0,
    );
    for _ in 0..150 {
        let report = w.step();
        assert_eq!(report.aborted, 0);
        for (a, b) in [(0, 1), (2, 3)] {
            let (p, q) = (w.agents[a].pose.position(), w.agents[b].pose.position());
            assert!((p.x + q.x).abs() < 1e-9, "{p:?} vs {q:?}");
            assert!((p.y - q.y).abs() < 1e-9 && (p.z - q.z).abs() < 1e-9);
            assert_eq!(w.agents[a].zeta, w.agents[b].zeta);
        }
    }
    assert!(
        w.agents.iter().all(|a| a.zeta),
        "all agents should reach the fire"
    );
}

#[test]
fn stepping_is_reproducible() {
    let run = || {
        let mut w = world(
            &[(-20.0, -5.0, 0.0), (15.0, 3.0, 0.0), (0.0, 22.0, 0.0)],
            fire(&[(0.0, 0.0), (5.0, 4.0)]),
            100.0,
        );
        for _ in 0..80 {
            w.step();
        }
        w.agents
            .iter()
            .map(|a| (a.pose, a.desired, a.zeta))
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distant_agents_do_not_influence(
        angle in 0.0..std::f64::consts::TAU,
        extra in 1.0..400.0f64,
        z in 0.0..120.0f64,
        steps in 0usize..40,
    ) {
        let radius = 60.0;
        let base = [(-8.0, -4.0, 25.0), (9.0, 3.0, 30.0), (0.0, 12.0, 20.0)];
        let mut w = world(&base, fire(&[(0.0, 0.0)]), radius);
        for _ in 0..steps {
            w.step();
        }
        // Far from every agent, measured from the swarm's lateral extent.
        let reach = w.agents.iter().map(|a| a.pose.position().xy().norm()).fold(0.0, f64::max);
        let d = reach + radius + extra;
        let far = AgentState::new(7, Pose::new(d * angle.cos(), d * angle.sin(), z), params());
        let mut agents = w.agents.clone();
        agents.push(far);
        let extended = WorldState::new(agents, w.fire.clone(), radius, 0, 3).unwrap();
        let before = w.proposals();
        let after = extended.proposals();
        for (a, b) in before.iter().zip(&after) {
            prop_assert_eq!(a, b);
        }
    }
}

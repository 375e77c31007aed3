//! SVG snapshots: heat map, camera footprints, agents and their links.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::fire::FireState;
use crate::geometry::Rect;
use crate::sensing::{fov_rect, CameraIntrinsics, Pose};
use crate::swarm::WorldState;

/// What a snapshot keeps of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: usize,
    pub pose: Pose,
    pub desired: Pose,
    pub zeta: bool,
}

/// A self-contained picture of the world, written as JSON next to each SVG.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub step: u64,
    pub comm_radius: f64,
    pub camera: CameraIntrinsics,
    pub extent: Rect,
    pub resolution: f64,
    pub agents: Vec<AgentSnapshot>,
    pub fire: FireState,
}

impl WorldSnapshot {
    pub fn capture(world: &WorldState, camera: CameraIntrinsics, extent: Rect, resolution: f64) -> Self {
        Self {
            step: world.step,
            comm_radius: world.comm_radius,
            camera,
            extent,
            resolution,
            agents: world
                .agents
                .iter()
                .map(|a| AgentSnapshot {
                    id: a.id,
                    pose: a.pose,
                    desired: a.desired,
                    zeta: a.zeta,
                })
                .collect(),
            fire: world.fire.state().clone(),
        }
    }
}

const WIDTH_PX: f64 = 800.0;

/// Renders the snapshot; intensities at or above `intensity_max` share the
/// hottest color.
pub fn render_svg(snap: &WorldSnapshot) -> String {
    let e = snap.extent;
    let scale = WIDTH_PX / e.width();
    let height_px = e.height() * scale;
    let sx = |x: f64| (x - e.x_min) * scale;
    let sy = |y: f64| (e.y_max - y) * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH_PX:.0}" height="{height_px:.0}" viewBox="0 0 {WIDTH_PX:.3} {height_px:.3}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<g class="heat">"#);
    if let Ok(grid) = snap.fire.intensity_grid(e, snap.resolution) {
        let cell = grid.resolution * scale;
        let cap = snap.camera.intensity_max;
        for row in 0..grid.rows {
            for col in 0..grid.cols {
                let v = grid.get(row, col);
                if v < 1e-3 * snap.camera.intensity_min {
                    continue;
                }
                let t = (v / cap).min(1.0);
                let shade = (255.0 * (1.0 - t)).round() as u8;
                let c = grid.cell_center(row, col);
                let half = 0.5 * grid.resolution;
                let _ = writeln!(
                    svg,
                    r##"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="#ff{shade:02x}{shade:02x}"/>"##,
                    sx(c.x - half),
                    sy(c.y + half)
                );
            }
        }
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="links">"#);
    for (i, a) in snap.agents.iter().enumerate() {
        for b in &snap.agents[i + 1..] {
            if (a.pose.position() - b.pose.position()).norm() <= snap.comm_radius {
                let _ = writeln!(
                    svg,
                    r##"<line class="link" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f5fbf" stroke-width="0.8" stroke-dasharray="4 3"/>"##,
                    sx(a.pose.lateral.x),
                    sy(a.pose.lateral.y),
                    sx(b.pose.lateral.x),
                    sy(b.pose.lateral.y)
                );
            }
        }
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="agents">"#);
    for a in &snap.agents {
        if let Ok(fov) = fov_rect(&a.pose, &snap.camera) {
            let b = fov.bounds();
            let _ = writeln!(
                svg,
                r##"<rect class="fov" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#208020" stroke-width="1"/>"##,
                sx(b.x_min),
                sy(b.y_max),
                b.width() * scale,
                b.height() * scale
            );
        }
        let (x, y) = (sx(a.pose.lateral.x), sy(a.pose.lateral.y));
        let fill = if a.zeta { "#000000" } else { "#808080" };
        let _ = writeln!(
            svg,
            r#"<circle class="agent" cx="{x:.2}" cy="{y:.2}" r="3" fill="{fill}"/><text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
            x + 4.0,
            y - 4.0,
            a.id
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text x="6" y="14" font-size="12">step {}</text>"#,
        snap.step
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fire::{FireFrontSource, SpreadParams, SpreadPolicy, WindModel};
    use crate::geometry::Vec2;
    use crate::sensing::ImportanceMode;

    fn snapshot(agents: &[(f64, f64, f64)]) -> WorldSnapshot {
        let fire = FireState::new(
            vec![FireFrontSource::new(Vec2::new(50.0, 50.0), Vec2::new(5.0, 5.0))],
            WindModel::new(0.0, 0.0, 0.0, 0.0).unwrap(),
            SpreadParams::new(1.0, 1.0).unwrap(),
            SpreadPolicy::default(),
        )
        .unwrap();
        WorldSnapshot {
            step: 0,
            comm_radius: 30.0,
            camera: CameraIntrinsics {
                focal_length: 10.0,
                pixel_area: 1e-4,
                half_angles: [0.5, 0.7],
                intensity_min: 0.005,
                intensity_max: 0.1,
                importance_gain: 1.0,
                regularizer: 1.5e-5,
                importance_mode: ImportanceMode::BorderFocus,
            },
            extent: Rect::new(0.0, 0.0, 100.0, 100.0),
            resolution: 5.0,
            agents: agents
                .iter()
                .enumerate()
                .map(|(id, &(x, y, z))| AgentSnapshot {
                    id,
                    pose: Pose::new(x, y, z),
                    desired: Pose::new(x, y, z),
                    zeta: false,
                })
                .collect(),
            fire,
        }
    }

    #[test]
    fn empty_world_has_only_heat() {
        let svg = render_svg(&snapshot(&[]));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("fill=\"#ff"));
        assert_eq!(svg.matches("class=\"fov\"").count(), 0);
        assert_eq!(svg.matches("class=\"agent\"").count(), 0);
    }

    #[test]
    fn element_counts() {
        let ten: Vec<_> = (0..10).map(|i| (10.0 * i as f64, 5.0, 20.0)).collect();
        let mut snap = snapshot(&ten);
        snap.comm_radius = 0.0;
        let svg = render_svg(&snap);
        assert_eq!(svg.matches("class=\"fov\"").count(), 10);
        assert_eq!(svg.matches("class=\"agent\"").count(), 10);
        assert_eq!(svg.matches("class=\"link\"").count(), 0);

        let pair = render_svg(&snapshot(&[(10.0, 10.0, 20.0), (30.0, 10.0, 20.0)]));
        assert_eq!(pair.matches("class=\"link\"").count(), 1);
    }

    #[test]
    fn snapshot_json_round_trip() {
        let snap = snapshot(&[(10.0, 10.0, 20.0)]);
        let text = serde_json::to_string(&snap).unwrap();
        let back: WorldSnapshot = serde_json::from_str(&text).unwrap();
        assert_eq!(render_svg(&back), render_svg(&snap));
    }
}

//! Downward camera geometry and coverage cost.
//!
//! A camera at altitude `z` images an axis-aligned ground rectangle with
//! half-extents `z·tanθ1` (x) by `z·tanθ2` (y). One pixel covers an area
//! growing with `(b − z)²`; several cameras seeing the same point combine
//! harmonically, regularized so an uncovered point costs `1/m`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rect, Vec2, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensingError {
    #[error("field of view is degenerate at altitude {0}")]
    DegenerateFov(f64),
    #[error("invalid camera parameter `{name}`: {reason}")]
    InvalidCamera { name: &'static str, reason: String },
}

/// Selects how fire points are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMode {
    /// `κ·(I_max − I)`: cooler border regions matter most.
    #[default]
    BorderFocus,
    /// Constant `κ`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_length: f64,
    pub pixel_area: f64,
    /// FOV half-angles in radians, `[θ1 (x), θ2 (y)]`.
    pub half_angles: [f64; 2],
    pub intensity_min: f64,
    pub intensity_max: f64,
    pub importance_gain: f64,
    /// Keeps the joint cost of uncovered points finite.
    pub regularizer: f64,
    pub importance_mode: ImportanceMode,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), SensingError> {
        let bad = |name, reason: &str| {
            Err(SensingError::InvalidCamera {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.focal_length > 0.0) {
            return bad("focal_length", "must be > 0");
        }
        if !(self.pixel_area > 0.0) {
            return bad("pixel_area", "must be > 0");
        }
        for a in self.half_angles {
            if !(a > 0.0 && a < std::f64::consts::FRAC_PI_2) {
                return bad("half_angles", "must lie strictly between 0 and π/2");
            }
        }
        if !(self.intensity_min < self.intensity_max) {
            return bad("intensity_min", "must be below intensity_max");
        }
        if !(self.regularizer > 0.0) {
            return bad("regularizer", "must be > 0");
        }
        if !(self.importance_gain >= 0.0) {
            return bad("importance_gain", "must be >= 0");
        }
        Ok(())
    }

    pub fn tan_half_angles(&self) -> Vec2 {
        Vec2::new(self.half_angles[0].tan(), self.half_angles[1].tan())
    }

    /// `S1 / b²`
    pub fn cost_scale(&self) -> f64 {
        self.pixel_area / (self.focal_length * self.focal_length)
    }
}

/// Lateral position plus altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub lateral: Vec2,
    pub altitude: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            lateral: Vec2::new(x, y),
            altitude: z,
        }
    }

    pub fn from_position(p: Vec3) -> Self {
        Self::new(p.x, p.y, p.z)
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.lateral.x, self.lateral.y, self.altitude)
    }

    /// The point directly below on the ground plane.
    pub fn ground_image(&self) -> Vec3 {
        Vec3::new(self.lateral.x, self.lateral.y, 0.0)
    }
}

/// One side of a footprint rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovEdge {
    pub start: Vec2,
    pub end: Vec2,
    /// Outward unit normal.
    pub normal: Vec2,
    /// Rate at which this side moves outward per unit of altitude.
    pub tan_half_angle: f64,
}

impl FovEdge {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Outward normals of the four footprint edges, in edge order.
pub const EDGE_NORMALS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

/// Ground footprint of a camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovRect {
    pub center: Vec2,
    pub half_extent: Vec2,
    tan_half_angles: Vec2,
}

impl FovRect {
    pub fn bounds(&self) -> Rect {
        Rect::from_center(self.center, self.half_extent)
    }

    /// Edges east, north, west, south; normals as in [`EDGE_NORMALS`].
    pub fn edges(&self) -> [FovEdge; 4] {
        let b = self.bounds();
        let (tx, ty) = (self.tan_half_angles.x, self.tan_half_angles.y);
        let edge = |start: Vec2, end: Vec2, k: usize, tan_half_angle: f64| FovEdge {
            start,
            end,
            normal: Vec2::new(EDGE_NORMALS[k][0], EDGE_NORMALS[k][1]),
            tan_half_angle,
        };
        [
            edge(Vec2::new(b.x_max, b.y_min), Vec2::new(b.x_max, b.y_max), 0, tx),
            edge(Vec2::new(b.x_max, b.y_max), Vec2::new(b.x_min, b.y_max), 1, ty),
            edge(Vec2::new(b.x_min, b.y_max), Vec2::new(b.x_min, b.y_min), 2, tx),
            edge(Vec2::new(b.x_min, b.y_min), Vec2::new(b.x_max, b.y_min), 3, ty),
        ]
    }
}

pub fn fov_rect(pose: &Pose, cam: &CameraIntrinsics) -> Result<FovRect, SensingError> {
    if !(pose.altitude > 0.0) {
        return Err(SensingError::DegenerateFov(pose.altitude));
    }
    let tan = cam.tan_half_angles();
    Ok(FovRect {
        center: pose.lateral,
        half_extent: pose.altitude * tan,
        tan_half_angles: tan,
    })
}

/// Closed membership of `q` in the camera footprint, tested per axis.
#[inline]
pub fn contains(pose: &Pose, cam: &CameraIntrinsics, q: Vec2) -> bool {
    let tan = cam.tan_half_angles();
    contains_with(pose, tan, q)
}

#[inline]
pub(crate) fn contains_with(pose: &Pose, tan: Vec2, q: Vec2) -> bool {
    (q.x - pose.lateral.x).abs() <= pose.altitude * tan.x
        && (q.y - pose.lateral.y).abs() <= pose.altitude * tan.y
}

/// Ground area imaged by one pixel at altitude `z`.
#[inline]
pub fn altitude_cost(z: f64, cam: &CameraIntrinsics) -> f64 {
    let d = cam.focal_length - z;
    cam.cost_scale() * d * d
}

/// Per-pixel cost of `q` for this camera, `None` when `q` is not imaged.
pub fn pixel_cost(pose: &Pose, cam: &CameraIntrinsics, q: Vec2) -> Option<f64> {
    contains(pose, cam, q).then(|| altitude_cost(pose.altitude, cam))
}

/// Harmonic combination `(Σ 1/f_i + m)⁻¹` from an already-summed `Σ 1/f_i`.
#[inline]
pub fn combine_inverse_costs(inverse_sum: f64, regularizer: f64) -> f64 {
    1.0 / (inverse_sum + regularizer)
}

/// Joint cost of `q` over the cameras in `covering_poses` that image it.
pub fn joint_cost(q: Vec2, covering_poses: &[Pose], cam: &CameraIntrinsics) -> f64 {
    let inverse_sum: f64 = covering_poses
        .iter()
        .filter_map(|p| pixel_cost(p, cam, q))
        .map(|f| 1.0 / f)
        .sum();
    combine_inverse_costs(inverse_sum, cam.regularizer)
}

/// Weight of a fire point with intensity `intensity`.
#[inline]
pub fn importance(intensity: f64, cam: &CameraIntrinsics) -> f64 {
    match cam.importance_mode {
        ImportanceMode::Uniform => cam.importance_gain,
        ImportanceMode::BorderFocus => {
            let clamped = intensity.clamp(cam.intensity_min, cam.intensity_max);
            cam.importance_gain * (cam.intensity_max - clamped)
        }
    }
}

/// A quadrature node: a point and the length or area it stands for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovSample {
    pub point: Vec2,
    pub weight: f64,
}

/// Quadrature nodes over a footprint's interior and each of its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedFov {
    pub interior: Vec<FovSample>,
    /// Indexed like [`FovRect::edges`].
    pub edges: [Vec<FovSample>; 4],
}

/// Default interior cell count (64 × 64).
pub const DEFAULT_INTERIOR_CELLS: usize = 4096;
/// Default quadrature points per edge.
pub const DEFAULT_EDGE_POINTS: usize = 256;

/// Splits the interior into about `target_cells` near-square cells (midpoint
/// nodes) and each edge into `edge_points` equal segments (midpoint nodes).
pub fn discretize_fov(rect: &FovRect, target_cells: usize, edge_points: usize) -> DiscretizedFov {
    let b = rect.bounds();
    let (w, h) = (b.width(), b.height());
    let target = target_cells.max(1) as f64;
    let nx = ((target * w / h).sqrt().round() as usize).max(1);
    let ny = ((target / nx as f64).round() as usize).max(1);
    let (dx, dy) = (w / nx as f64, h / ny as f64);
    let cell_area = dx * dy;
    let mut interior = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = b.y_min + (j as f64 + 0.5) * dy;
        for i in 0..nx {
            interior.push(FovSample {
                point: Vec2::new(b.x_min + (i as f64 + 0.5) * dx, y),
                weight: cell_area,
            });
        }
    }
    let n = edge_points.max(1);
    let edges = rect.edges().map(|e| {
        let seg = e.length() / n as f64;
        (0..n)
            .map(|k| FovSample {
                point: e.start + (e.end - e.start) * ((k as f64 + 0.5) / n as f64),
                weight: seg,
            })
            .collect()
    });
    DiscretizedFov { interior, edges }
}

//! Coverage objective and the decentralized gradient that drives each agent's
//! desired virtual position.
//!
//! The objective integrates the joint camera cost weighted by importance over
//! the detectable fire `Q = {q : I(q) > I_min}`. An agent only differentiates
//! the part it influences: the edges of its own footprint (where coverage
//! switches on or off as it moves) and its interior (where its pixel cost
//! changes with altitude).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fire::IntensityField;
use crate::geometry::{Rect, Vec2};
use crate::sensing::{
    altitude_cost, combine_inverse_costs, contains_with, discretize_fov, fov_rect, importance,
    CameraIntrinsics, Pose,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error("altitude {altitude} equals the focal length; the altitude gradient is singular")]
    Singular { altitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// `k_c`
    pub lateral_gain: f64,
    /// `k_z`
    pub vertical_gain: f64,
    pub dt: f64,
    /// Caps the Euclidean norm of the applied desired-position step.
    #[serde(default)]
    pub gradient_clip: Option<f64>,
}

/// `∂H/∂c_i` and `∂H/∂z_i` for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientResult {
    pub d_lateral: Vec2,
    pub d_vertical: f64,
}

impl GradientResult {
    pub fn is_finite(&self) -> bool {
        self.d_lateral.x.is_finite() && self.d_lateral.y.is_finite() && self.d_vertical.is_finite()
    }
}

/// Footprint quadrature resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discretization {
    pub interior_cells: usize,
    pub edge_points: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            interior_cells: crate::sensing::DEFAULT_INTERIOR_CELLS,
            edge_points: crate::sensing::DEFAULT_EDGE_POINTS,
        }
    }
}

/// A footprint quadrature node that lies on the fire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirePoint {
    pub point: Vec2,
    /// Length or area the node stands for.
    pub weight: f64,
    /// Importance at the node.
    pub importance: f64,
}

/// The fire as seen through one footprint: `Q ∩ B̂` and `Q ∩ l̂_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FovFire {
    pub interior: Vec<FirePoint>,
    pub edges: [Vec<FirePoint>; 4],
}

impl FovFire {
    pub fn is_empty(&self) -> bool {
        self.interior.is_empty() && self.edges.iter().all(Vec::is_empty)
    }
}

/// Reads the intensity at every footprint node and keeps the ones on fire.
///
/// A grounded pose has no footprint and sees nothing.
pub fn sample_fov_fire<F: IntensityField + ?Sized>(
    pose: &Pose,
    field: &F,
    cam: &CameraIntrinsics,
    disc: &Discretization,
) -> FovFire {
    let Ok(rect) = fov_rect(pose, cam) else {
        return FovFire::default();
    };
    let nodes = discretize_fov(&rect, disc.interior_cells, disc.edge_points);
    let keep = |samples: &[crate::sensing::FovSample]| -> Vec<FirePoint> {
        samples
            .iter()
            .filter_map(|s| {
                let i = field.intensity(s.point);
                (i > cam.intensity_min).then(|| FirePoint {
                    point: s.point,
                    weight: s.weight,
                    importance: importance(i, cam),
                })
            })
            .collect()
    };
    FovFire {
        interior: keep(&nodes.interior),
        edges: [
            keep(&nodes.edges[0]),
            keep(&nodes.edges[1]),
            keep(&nodes.edges[2]),
            keep(&nodes.edges[3]),
        ],
    }
}

/// Gradient of the coverage objective with respect to one agent's pose,
/// from its own fire samples and its neighbors' poses only.
pub fn local_gradient_from_samples(
    pose: &Pose,
    neighbors: &[Pose],
    fire: &FovFire,
    cam: &CameraIntrinsics,
) -> Result<GradientResult, CoverageError> {
    let z = pose.altitude;
    let gap = cam.focal_length - z;
    if gap == 0.0 {
        return Err(CoverageError::Singular { altitude: z });
    }
    let tan = cam.tan_half_angles();
    let m = cam.regularizer;
    let self_inverse = 1.0 / altitude_cost(z, cam);

    // Canonical neighbor order makes the result independent of how the caller
    // listed them, bit for bit.
    let mut others: Vec<(Pose, f64)> = neighbors
        .iter()
        .filter(|p| p.altitude > 0.0)
        .map(|p| (*p, 1.0 / altitude_cost(p.altitude, cam)))
        .collect();
    others.sort_by(|a, b| {
        let (pa, pb) = (a.0.position(), b.0.position());
        pa.x.total_cmp(&pb.x)
            .then(pa.y.total_cmp(&pb.y))
            .then(pa.z.total_cmp(&pb.z))
    });
    let others_inverse = |q: Vec2| -> f64 {
        others
            .iter()
            .filter(|(p, _)| contains_with(p, tan, q))
            .map(|(_, inv)| inv)
            .sum()
    };

    let mut d_lateral = Vec2::zeros();
    let mut d_vertical = 0.0;
    let normals = crate::sensing::EDGE_NORMALS;
    let edge_tan = [tan.x, tan.y, tan.x, tan.y];
    for (k, points) in fire.edges.iter().enumerate() {
        let normal = Vec2::new(normals[k][0], normals[k][1]);
        for p in points {
            let rest = others_inverse(p.point);
            let with_self = combine_inverse_costs(rest + self_inverse, m);
            let without_self = combine_inverse_costs(rest, m);
            let w = (with_self - without_self) * p.importance * p.weight;
            d_lateral += w * normal;
            d_vertical += w * edge_tan[k];
        }
    }
    let denominator = cam.cost_scale() * gap * gap * gap;
    for p in &fire.interior {
        let f = combine_inverse_costs(others_inverse(p.point) + self_inverse, m);
        d_vertical -= 2.0 * f * f / denominator * p.importance * p.weight;
    }
    Ok(GradientResult {
        d_lateral,
        d_vertical,
    })
}

/// Samples the footprint and returns the local gradient.
pub fn local_gradient<F: IntensityField + ?Sized>(
    pose: &Pose,
    neighbors: &[Pose],
    field: &F,
    cam: &CameraIntrinsics,
    disc: &Discretization,
) -> Result<GradientResult, CoverageError> {
    let fire = sample_fov_fire(pose, field, cam, disc);
    local_gradient_from_samples(pose, neighbors, &fire, cam)
}

/// One descent step of the desired virtual position.
pub fn update_desired(desired: &Pose, grad: &GradientResult, gains: &ControllerGains) -> Pose {
    let mut step = nalgebra::Vector3::new(
        gains.lateral_gain * grad.d_lateral.x,
        gains.lateral_gain * grad.d_lateral.y,
        gains.vertical_gain * grad.d_vertical,
    ) * gains.dt;
    if let Some(clip) = gains.gradient_clip {
        let norm = step.norm();
        if norm > clip {
            step *= clip / norm;
        }
    }
    Pose::from_position(desired.position() - step)
}

/// Uniform cell grid over which the objective is integrated.
///
/// Within a cell the density `φ·1_Q` is the mean of `density_samples²`
/// point samples on a regular sub-lattice (one sample means the center).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub extent: Rect,
    pub cols: usize,
    pub rows: usize,
    pub density_samples: usize,
}

impl GridSpec {
    pub fn square(extent: Rect, cells_per_side: usize) -> Self {
        Self {
            extent,
            cols: cells_per_side,
            rows: cells_per_side,
            density_samples: 1,
        }
    }

    /// Cells of side close to `cell` covering `extent`.
    pub fn with_cell_size(extent: Rect, cell: f64) -> Self {
        let n = |len: f64| ((len / cell).ceil() as usize).max(1);
        Self {
            extent,
            cols: n(extent.width()),
            rows: n(extent.height()),
            density_samples: 1,
        }
    }

    pub fn with_density_samples(self, per_axis: usize) -> Self {
        Self {
            density_samples: per_axis.max(1),
            ..self
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> Rect {
        let dx = self.extent.width() / self.cols as f64;
        let dy = self.extent.height() / self.rows as f64;
        Rect::new(
            self.extent.x_min + col as f64 * dx,
            self.extent.y_min + row as f64 * dy,
            self.extent.x_min + (col + 1) as f64 * dx,
            self.extent.y_min + (row + 1) as f64 * dy,
        )
    }
}

/// A fire cell: where it is and how much it matters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireCell {
    pub cell: Rect,
    /// Mean of `φ·1_Q` over the cell.
    pub importance: f64,
    /// Share of the cell's density samples on the fire.
    pub fire_share: f64,
}

/// Grid cells with any density sample on the fire.
pub fn fire_cells<F: IntensityField + ?Sized>(
    field: &F,
    cam: &CameraIntrinsics,
    grid: &GridSpec,
) -> Vec<FireCell> {
    let n = grid.density_samples.max(1);
    let total = (n * n) as f64;
    let mut cells = Vec::new();
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            let cell = grid.cell(row, col);
            let (mut weight, mut hits) = (0.0, 0usize);
            for j in 0..n {
                let y = cell.y_min + (j as f64 + 0.5) / n as f64 * cell.height();
                for i in 0..n {
                    let x = cell.x_min + (i as f64 + 0.5) / n as f64 * cell.width();
                    let intensity = field.intensity(Vec2::new(x, y));
                    if intensity > cam.intensity_min {
                        weight += importance(intensity, cam);
                        hits += 1;
                    }
                }
            }
            if hits > 0 {
                cells.push(FireCell {
                    cell,
                    importance: weight / total,
                    fire_share: hits as f64 / total,
                });
            }
        }
    }
    cells
}

/// Footprints of every airborne pose with their inverse pixel costs.
pub(crate) fn footprints(poses: &[Pose], cam: &CameraIntrinsics) -> Vec<(Rect, f64)> {
    poses
        .iter()
        .filter_map(|p| {
            fov_rect(p, cam)
                .ok()
                .map(|r| (r.bounds(), 1.0 / altitude_cost(p.altitude, cam)))
        })
        .collect()
}

/// `∫_cell f_N(q) dq` with footprint coverage resolved exactly inside the cell.
///
/// The cell is cut along every footprint side crossing it; coverage is
/// constant on each piece.
fn cell_cost_integral(cell: &Rect, prints: &[(Rect, f64)], m: f64, scratch: &mut CellScratch) -> f64 {
    scratch.hits.clear();
    scratch
        .hits
        .extend(prints.iter().filter(|(r, _)| r.intersects(cell)).copied());
    if scratch.hits.is_empty() {
        return cell.area() / m;
    }
    let xs = &mut scratch.xs;
    let ys = &mut scratch.ys;
    xs.clear();
    ys.clear();
    xs.extend([cell.x_min, cell.x_max]);
    ys.extend([cell.y_min, cell.y_max]);
    for (r, _) in &scratch.hits {
        for x in [r.x_min, r.x_max] {
            if x > cell.x_min && x < cell.x_max {
                xs.push(x);
            }
        }
        for y in [r.y_min, r.y_max] {
            if y > cell.y_min && y < cell.y_max {
                ys.push(y);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for wy in ys.windows(2) {
        for wx in xs.windows(2) {
            let area = (wx[1] - wx[0]) * (wy[1] - wy[0]);
            if area <= 0.0 {
                continue;
            }
            let mid = Vec2::new(0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1]));
            let inverse: f64 = scratch
                .hits
                .iter()
                .filter(|(r, _)| r.contains(mid))
                .map(|(_, inv)| inv)
                .sum();
            total += combine_inverse_costs(inverse, m) * area;
        }
    }
    total
}

#[derive(Default)]
struct CellScratch {
    hits: Vec<(Rect, f64)>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// Objective over precomputed fire cells.
pub fn objective_over_cells(poses: &[Pose], cells: &[FireCell], cam: &CameraIntrinsics) -> f64 {
    let prints = footprints(poses, cam);
    let mut scratch = CellScratch::default();
    cells
        .iter()
        .map(|c| c.importance * cell_cost_integral(&c.cell, &prints, cam.regularizer, &mut scratch))
        .sum()
}

/// Global coverage objective `H` on `grid`: fire membership and importance
/// are taken at cell centers, footprint coverage is resolved exactly.
///
/// This is a diagnostic; agents never evaluate it.
pub fn objective_h<F: IntensityField + ?Sized>(
    poses: &[Pose],
    field: &F,
    cam: &CameraIntrinsics,
    grid: &GridSpec,
) -> f64 {
    objective_over_cells(poses, &fire_cells(field, cam, grid), cam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fire::{FireFrontSource, FireState, SpreadParams, SpreadPolicy, WindModel};
    use crate::sensing::ImportanceMode;
    use approx::assert_relative_eq;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics {
            focal_length: 10.0,
            pixel_area: 1e-4,
            half_angles: [30f64.to_radians(), 45f64.to_radians()],
            intensity_min: 0.005,
            intensity_max: 0.1,
            importance_gain: 1.0,
            regularizer: 1.5e-5,
            importance_mode: ImportanceMode::BorderFocus,
        }
    }

    fn fire(sources: &[(f64, f64, f64)]) -> FireState {
        FireState::new(
            sources
                .iter()
                .map(|&(x, y, s)| FireFrontSource::new(Vec2::new(x, y), Vec2::new(s, s)))
                .collect(),
            WindModel::new(0.0, 0.0, 0.0, 0.0).unwrap(),
            SpreadParams::new(1.0, 1.0).unwrap(),
            SpreadPolicy::default(),
        )
        .unwrap()
    }

    fn gains(kc: f64, kz: f64) -> ControllerGains {
        ControllerGains {
            lateral_gain: kc,
            vertical_gain: kz,
            dt: 1.0,
            gradient_clip: None,
        }
    }

    #[test]
    fn no_fire_means_zero_objective_and_gradient() {
        let f = fire(&[(5000.0, 5000.0, 3.0)]);
        let grid = GridSpec::square(Rect::new(0.0, 0.0, 200.0, 200.0), 32);
        let poses = [Pose::new(100.0, 100.0, 60.0)];
        assert_eq!(objective_h(&poses, &f, &cam(), &grid), 0.0);
        let g = local_gradient(&poses[0], &[], &f, &cam(), &Discretization::default()).unwrap();
        assert_eq!(g, GradientResult::default());
    }

    #[test]
    fn uncovered_objective_and_first_camera() {
        let f = fire(&[(100.0, 100.0, 4.0), (108.0, 100.0, 4.0)]);
        let c = cam();
        let grid = GridSpec::square(Rect::new(50.0, 50.0, 150.0, 150.0), 64);
        let cells = fire_cells(&f, &c, &grid);
        assert!(!cells.is_empty());
        let expected: f64 = cells.iter().map(|k| k.importance * k.cell.area()).sum::<f64>() / c.regularizer;
        assert!(cells.iter().all(|k| k.fire_share == 1.0));
        let bare = objective_h(&[], &f, &c, &grid);
        assert_relative_eq!(bare, expected, max_relative = 1e-12);
        let far = objective_h(&[Pose::new(900.0, 900.0, 60.0)], &f, &c, &grid);
        assert_relative_eq!(far, bare, max_relative = 1e-12);
        let covered = objective_h(&[Pose::new(104.0, 100.0, 60.0)], &f, &c, &grid);
        assert!(covered < bare);
    }

    #[test]
    fn objective_converges_under_refinement() {
        let f = fire(&[(95.0, 100.0, 5.0), (104.0, 101.0, 5.0)]);
        let c = cam();
        let poses = [Pose::new(92.0, 96.0, 12.0), Pose::new(108.0, 104.0, 14.0)];
        let extent = Rect::new(70.0, 70.0, 130.0, 130.0);
        let coarse = objective_h(&poses, &f, &c, &GridSpec::square(extent, 64));
        let fine = objective_h(&poses, &f, &c, &GridSpec::square(extent, 256));
        assert!(((coarse - fine) / fine).abs() < 0.02, "{coarse} vs {fine}");
    }

    #[test]
    fn single_agent_over_contained_fire() {
        // All fire strictly inside the footprint: no edge contribution, and the
        // altitude gradient is the positive interior term (descent lowers z).
        let f = fire(&[(0.0, 0.0, 3.0)]);
        let pose = Pose::new(0.0, 0.0, 60.0);
        let g = local_gradient(&pose, &[], &f, &cam(), &Discretization::default()).unwrap();
        assert_eq!(g.d_lateral, Vec2::zeros());
        assert!(g.d_vertical > 0.0);
        let next = update_desired(&pose, &g, &gains(1e-9, 1.0));
        assert!(next.altitude < pose.altitude);
    }

    #[test]
    fn focal_plane_is_singular() {
        let f = fire(&[(0.0, 0.0, 3.0)]);
        let r = local_gradient(
            &Pose::new(0.0, 0.0, 10.0),
            &[],
            &f,
            &cam(),
            &Discretization::default(),
        );
        assert_eq!(r, Err(CoverageError::Singular { altitude: 10.0 }));
    }

    #[test]
    fn mirrored_agents_get_mirrored_gradients() {
        let f = fire(&[(-6.0, 0.0, 5.0), (6.0, 0.0, 5.0), (0.0, 20.0, 5.0)]);
        let c = cam();
        let d = Discretization::default();
        let a = Pose::new(-30.0, 5.0, 50.0);
        let b = Pose::new(30.0, 5.0, 50.0);
        let ga = local_gradient(&a, &[b], &f, &c, &d).unwrap();
        let gb = local_gradient(&b, &[a], &f, &c, &d).unwrap();
        let scale = ga.d_lateral.norm().max(1.0);
        assert!((ga.d_lateral.x + gb.d_lateral.x).abs() <= 1e-9 * scale);
        assert!((ga.d_lateral.y - gb.d_lateral.y).abs() <= 1e-9 * scale);
        assert!((ga.d_vertical - gb.d_vertical).abs() <= 1e-9 * ga.d_vertical.abs().max(1.0));
    }

    #[test]
    fn neighbor_order_is_irrelevant() {
        let f = fire(&[(0.0, 0.0, 8.0), (20.0, 10.0, 8.0)]);
        let c = cam();
        let d = Discretization::default();
        let me = Pose::new(5.0, 0.0, 45.0);
        let mut ns = vec![
            Pose::new(30.0, 10.0, 50.0),
            Pose::new(-20.0, 5.0, 40.0),
            Pose::new(10.0, -30.0, 60.0),
        ];
        let g0 = local_gradient(&me, &ns, &f, &c, &d).unwrap();
        ns.reverse();
        let g1 = local_gradient(&me, &ns, &f, &c, &d).unwrap();
        ns.swap(0, 1);
        let g2 = local_gradient(&me, &ns, &f, &c, &d).unwrap();
        assert_eq!(g0, g1);
        assert_eq!(g0, g2);
    }

    #[test]
    fn desired_update_examples() {
        let p = Pose::new(1.0, 2.0, 3.0);
        let g = GradientResult {
            d_lateral: Vec2::new(1e9, 0.0),
            d_vertical: 0.0,
        };
        assert_eq!(
            update_desired(&p, &GradientResult::default(), &gains(1e-9, 2e-10)),
            p
        );
        assert_eq!(update_desired(&p, &g, &gains(0.0, 0.0)), p);
        let moved = update_desired(&p, &g, &gains(1e-9, 2e-10));
        assert_relative_eq!(moved.lateral.x, 0.0, epsilon = 1e-12);
        assert_eq!(moved.lateral.y, 2.0);
        let mut clipped = gains(1e-9, 2e-10);
        clipped.gradient_clip = Some(0.25);
        assert_relative_eq!(update_desired(&p, &g, &clipped).lateral.x, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn exact_cell_integral_matches_brute_force() {
        let c = cam();
        let poses = [Pose::new(3.3, 1.2, 8.0), Pose::new(-2.0, -4.1, 12.0)];
        let prints = footprints(&poses, &c);
        let cell = Rect::new(-6.0, -6.0, 6.0, 6.0);
        let exact = cell_cost_integral(&cell, &prints, c.regularizer, &mut CellScratch::default());
        let n = 600;
        let h = 12.0 / n as f64;
        let mut brute = 0.0;
        for j in 0..n {
            for i in 0..n {
                let q = Vec2::new(-6.0 + (i as f64 + 0.5) * h, -6.0 + (j as f64 + 0.5) * h);
                brute += crate::sensing::joint_cost(q, &poses, &c) * h * h;
            }
        }
        assert_relative_eq!(exact, brute, max_relative = 0.01);
    }

    #[test]
    fn gradient_agrees_with_finite_differences_on_one_config() {
        // The east edge of the only camera cuts straight through one source.
        let f = fire(&[(0.0, 0.0, 4.0)]);
        let c = cam();
        let d = Discretization::default();
        let pose = Pose::new(-20.0 * 30f64.to_radians().tan() + 1.0, 3.0, 20.0);
        let mut extent = f.support(4.0).union(&footprints(&[pose], &c)[0].0);
        extent = extent.expanded(1.0);
        let grid = GridSpec::square(extent, 128).with_density_samples(4);
        let eps = 0.1;
        let g = local_gradient(&pose, &[], &f, &c, &d).unwrap();
        let mut fd = [0.0; 3];
        for (axis, slot) in fd.iter_mut().enumerate() {
            let (mut pp, mut pm) = (pose.position(), pose.position());
            pp[axis] += eps;
            pm[axis] -= eps;
            let h = |v| objective_h(&[Pose::from_position(v)], &f, &c, &grid);
            *slot = (h(pp) - h(pm)) / (2.0 * eps);
        }
        let analytic = nalgebra::Vector3::new(g.d_lateral.x, g.d_lateral.y, g.d_vertical);
        let numeric = nalgebra::Vector3::from(fd);
        let rel = (analytic - numeric).norm() / numeric.norm();
        assert!(rel < 0.05, "analytic {analytic:?} numeric {numeric:?} rel {rel}");
    }
}

//! Fire-front propagation and the heat field it radiates.
//!
//! Every fire-front source drifts along the elliptical spread offset computed
//! from a stochastic wind draw. A step spawns one child per active source at
//! the drifted position; the parent keeps radiating heat. The heat intensity at
//! a point is the sum of one bivariate Gaussian per source.

mod raster;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DegenerateRect, Rect, Vec2};

pub use raster::{HeatRaster, Raster, RasterParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FireError {
    #[error("invalid fire parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("length-to-breadth ratio {lb} < 1 for wind speed {speed}")]
    LengthToBreadthDomain { lb: f64, speed: f64 },
    #[error("grid resolution must be positive, got {0}")]
    Resolution(f64),
    #[error(transparent)]
    Extent(#[from] DegenerateRect),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> FireError {
    FireError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Gaussian wind: direction is an azimuth measured clockwise from +y (north).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindModel {
    pub mean_direction: f64,
    pub std_direction: f64,
    /// Mid-flame wind speed, mph.
    pub mean_speed: f64,
    pub std_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindSample {
    pub theta: f64,
    pub speed: f64,
}

impl WindModel {
    pub fn new(
        mean_direction: f64,
        std_direction: f64,
        mean_speed: f64,
        std_speed: f64,
    ) -> Result<Self, FireError> {
        let wind = Self {
            mean_direction,
            std_direction,
            mean_speed,
            std_speed,
        };
        wind.validate()?;
        Ok(wind)
    }

    pub fn validate(&self) -> Result<(), FireError> {
        if !(self.std_direction >= 0.0 && self.std_direction.is_finite()) {
            return Err(invalid("std_direction", "must be finite and >= 0"));
        }
        if !(self.std_speed >= 0.0 && self.std_speed.is_finite()) {
            return Err(invalid("std_speed", "must be finite and >= 0"));
        }
        if !self.mean_direction.is_finite() || !self.mean_speed.is_finite() {
            return Err(invalid("mean", "wind means must be finite"));
        }
        Ok(())
    }

    /// Draws `(theta, speed)`; theta is reduced into `[0, 2π)` and negative
    /// speeds are clamped to zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WindSample {
        // Both std devs are validated non-negative, so construction cannot fail.
        let direction =
            Normal::new(self.mean_direction, self.std_direction).expect("validated direction deviation");
        let speed = Normal::new(self.mean_speed, self.std_speed).expect("validated speed deviation");
        let theta = direction.sample(rng).rem_euclid(TAU);
        let speed = speed.sample(rng).max(0.0);
        WindSample { theta, speed }
    }
}

/// Steady-state rate of spread and the duration of one fire step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadParams {
    pub rate: f64,
    pub dt: f64,
}

impl SpreadParams {
    pub fn new(rate: f64, dt: f64) -> Result<Self, FireError> {
        let p = Self { rate, dt };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FireError> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(invalid("spread_rate", "must be finite and >= 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("spread_dt", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// How a step treats spawns that crowd existing sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadPolicy {
    /// A spawn landing strictly closer than this to any existing source is
    /// suppressed and its parent stops spreading. Zero disables the check.
    pub min_front_separation: f64,
    /// One wind draw per step for all sources instead of one per source.
    pub wind_shared: bool,
}

impl Default for SpreadPolicy {
    fn default() -> Self {
        Self {
            min_front_separation: 0.0,
            wind_shared: false,
        }
    }
}

/// Length-to-breadth ratio of the spread ellipse for mid-flame wind speed `speed`.
pub fn length_to_breadth(speed: f64) -> f64 {
    0.936 * (0.2566 * speed).exp() + 0.461 * (-0.1548 * speed).exp() - 0.397
}

/// Head-to-back ratio derived from the length-to-breadth ratio.
pub fn head_to_back(lb: f64) -> f64 {
    let root = (lb * lb - 1.0).sqrt();
    (lb + root) / (lb - root)
}

/// Rate at which a front point's ellipse center moves away from it, as the
/// `(east, north)` components for wind azimuth `theta`.
pub fn elliptical_offset(speed: f64, theta: f64, spread: &SpreadParams) -> Result<Vec2, FireError> {
    let lb = length_to_breadth(speed);
    if !(lb >= 1.0) {
        return Err(FireError::LengthToBreadthDomain { lb, speed });
    }
    let hb = head_to_back(lb);
    let r = spread.rate;
    let c = (r - r / hb) / 2.0;
    Ok(Vec2::new(c * theta.sin(), c * theta.cos()))
}

/// A heat source on the fire front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FireFrontSource {
    pub position: Vec2,
    pub sigma: Vec2,
    pub active: bool,
}

impl FireFrontSource {
    pub fn new(position: Vec2, sigma: Vec2) -> Self {
        Self {
            position,
            sigma,
            active: true,
        }
    }

    #[inline]
    pub fn normalization(&self) -> f64 {
        1.0 / (2.0 * PI * self.sigma.x * self.sigma.y)
    }

    /// This source's share of the intensity at `q`.
    #[inline]
    pub fn contribution(&self, q: Vec2) -> f64 {
        let u = (q.x - self.position.x) / self.sigma.x;
        let v = (q.y - self.position.y) / self.sigma.y;
        self.normalization() * (-0.5 * u * u).exp() * (-0.5 * v * v).exp()
    }
}

/// Anything that can report heat intensity at a ground point.
///
/// Implementations are read-only snapshots and may be shared across threads.
pub trait IntensityField: Sync {
    fn intensity(&self, q: Vec2) -> f64;
}

/// Uniform-grid index over source positions, used for spawn suppression.
#[derive(Debug, Clone, Default)]
struct SeparationIndex {
    cell: f64,
    indexed: usize,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl SeparationIndex {
    fn key(&self, p: Vec2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn sync(&mut self, cell: f64, sources: &[FireFrontSource]) {
        if self.cell != cell || self.indexed > sources.len() {
            self.cell = cell;
            self.indexed = 0;
            self.buckets.clear();
        }
        for (i, s) in sources.iter().enumerate().skip(self.indexed) {
            let k = self.key(s.position);
            self.buckets.entry(k).or_default().push(i as u32);
        }
        self.indexed = sources.len();
    }

    fn crowded(&self, p: Vec2, separation: f64, sources: &[FireFrontSource]) -> bool {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    if ids
                        .iter()
                        .any(|&i| (sources[i as usize].position - p).norm() < separation)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// The time-varying fire: all sources ever spawned plus the spread model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FireState {
    pub sources: Vec<FireFrontSource>,
    pub wind: WindModel,
    pub spread: SpreadParams,
    pub policy: SpreadPolicy,
    pub time: u64,
    #[serde(skip)]
    index: SeparationIndex,
}

impl FireState {
    pub fn new(
        sources: Vec<FireFrontSource>,
        wind: WindModel,
        spread: SpreadParams,
        policy: SpreadPolicy,
    ) -> Result<Self, FireError> {
        if sources.is_empty() {
            return Err(invalid("sources", "at least one fire-front source is required"));
        }
        for s in &sources {
            if !(s.sigma.x > 0.0 && s.sigma.y > 0.0) {
                return Err(invalid("sigma", "source deviations must be > 0"));
            }
            if !(s.position.x.is_finite() && s.position.y.is_finite()) {
                return Err(invalid("position", "source positions must be finite"));
            }
        }
        wind.validate()?;
        spread.validate()?;
        if !(policy.min_front_separation >= 0.0) {
            return Err(invalid("min_front_separation", "must be >= 0"));
        }
        Ok(Self {
            sources,
            wind,
            spread,
            policy,
            time: 0,
            index: SeparationIndex::default(),
        })
    }

    /// Seeds `count` sources uniformly inside a disk.
    pub fn seeded<R: Rng + ?Sized>(
        count: usize,
        center: Vec2,
        radius: f64,
        sigma: Vec2,
        wind: WindModel,
        spread: SpreadParams,
        policy: SpreadPolicy,
        rng: &mut R,
    ) -> Result<Self, FireError> {
        let sources = (0..count)
            .map(|_| {
                let r = radius * rng.random::<f64>().sqrt();
                let a = TAU * rng.random::<f64>();
                FireFrontSource::new(center + Vec2::new(r * a.cos(), r * a.sin()), sigma)
            })
            .collect();
        Self::new(sources, wind, spread, policy)
    }

    pub fn active_count(&self) -> usize {
        self.sources.iter().filter(|s| s.active).count()
    }

    /// Advances the fire by one step and returns how many sources were spawned.
    ///
    /// Sources are visited in index order, so a fixed rng stream gives a fixed
    /// result. New sources are appended; none are ever removed.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let separation = self.policy.min_front_separation;
        if separation > 0.0 {
            self.index.sync(separation, &self.sources);
        }
        let shared = self.policy.wind_shared.then(|| self.wind.sample(rng));
        let parents = self.sources.len();
        let mut spawned = 0;
        for i in 0..parents {
            if !self.sources[i].active {
                continue;
            }
            let wind = shared.unwrap_or_else(|| self.wind.sample(rng));
            let offset = elliptical_offset(wind.speed, wind.theta, &self.spread)
                .expect("clamped wind speed keeps the length-to-breadth ratio >= 1");
            let parent = self.sources[i];
            let position = parent.position + self.spread.dt * offset;
            if separation > 0.0 && self.index.crowded(position, separation, &self.sources) {
                self.sources[i].active = false;
                continue;
            }
            self.sources.push(FireFrontSource::new(position, parent.sigma));
            if separation > 0.0 {
                self.index.sync(separation, &self.sources);
            }
            spawned += 1;
        }
        self.time += 1;
        spawned
    }

    /// Exact intensity: the sum of every source's Gaussian, in index order.
    pub fn intensity_at(&self, q: Vec2) -> f64 {
        self.sources.iter().fold(0.0, |acc, s| acc + s.contribution(q))
    }

    /// Evaluates [`Self::intensity_at`] at every cell center of a raster laid
    /// over `extent` with square cells of side `resolution`.
    pub fn intensity_grid(&self, extent: Rect, resolution: f64) -> Result<Raster, FireError> {
        extent.validate()?;
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(FireError::Resolution(resolution));
        }
        let mut raster = Raster::empty(extent, resolution);
        let xs: Vec<f64> = (0..raster.cols).map(|c| raster.cell_center(0, c).x).collect();
        let ys: Vec<f64> = (0..raster.rows).map(|r| raster.cell_center(r, 0).y).collect();
        let mut ex = vec![0.0; xs.len()];
        let mut ey = vec![0.0; ys.len()];
        for s in &self.sources {
            let norm = s.normalization();
            let cols = gaussian_row(&xs, s.position.x, s.sigma.x, &mut ex);
            let rows = gaussian_row(&ys, s.position.y, s.sigma.y, &mut ey);
            let (Some(cols), Some(rows)) = (cols, rows) else {
                continue;
            };
            for r in rows.clone() {
                let line = &mut raster.values[r * raster.cols..(r + 1) * raster.cols];
                for c in cols.clone() {
                    line[c] += norm * ex[c] * ey[r];
                }
            }
        }
        Ok(raster)
    }

    /// Bounding box of the source positions, padded by `pad_sigmas` of the
    /// largest source deviation.
    pub fn support(&self, pad_sigmas: f64) -> Rect {
        let mut bbox = Rect::new(f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        let mut sigma: f64 = 0.0;
        for s in &self.sources {
            bbox = bbox.union(&Rect::new(s.position.x, s.position.y, s.position.x, s.position.y));
            sigma = sigma.max(s.sigma.x).max(s.sigma.y);
        }
        bbox.expanded(pad_sigmas * sigma)
    }
}

impl IntensityField for FireState {
    fn intensity(&self, q: Vec2) -> f64 {
        self.intensity_at(q)
    }
}

/// Fills `out[i] = exp(-½((coords[i] - mean)/sigma)²)` and returns the index
/// range of entries that did not underflow to zero.
fn gaussian_row(coords: &[f64], mean: f64, sigma: f64, out: &mut [f64]) -> Option<std::ops::Range<usize>> {
    let mut first = None;
    let mut last = 0;
    for (i, &x) in coords.iter().enumerate() {
        let u = (x - mean) / sigma;
        let e = (-0.5 * u * u).exp();
        out[i] = e;
        if e > 0.0 {
            first.get_or_insert(i);
            last = i;
        }
    }
    first.map(|f| f..last + 1)
}

/// A fire plus an optional rasterized copy of its heat field for fast sampling.
///
/// Without a raster every query is exact. With one, queries inside the
/// raster extent are bilinear interpolations of node values, and queries
/// outside fall back to the exact sum.
#[derive(Debug, Clone)]
pub struct FireField {
    state: FireState,
    raster: Option<HeatRaster>,
}

impl FireField {
    pub fn exact(state: FireState) -> Self {
        Self { state, raster: None }
    }

    pub fn rasterized(state: FireState, raster: HeatRaster) -> Self {
        let mut field = Self {
            state,
            raster: Some(raster),
        };
        field.sync_raster();
        field
    }

    pub fn state(&self) -> &FireState {
        &self.state
    }

    pub fn raster(&self) -> Option<&HeatRaster> {
        self.raster.as_ref()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let spawned = self.state.step(rng);
        self.sync_raster();
        spawned
    }

    fn sync_raster(&mut self) {
        if let Some(raster) = self.raster.as_mut() {
            raster.sync(&self.state.sources);
        }
    }
}

impl IntensityField for FireField {
    fn intensity(&self, q: Vec2) -> f64 {
        match &self.raster {
            Some(r) => r.sample(q).unwrap_or_else(|| self.state.intensity_at(q)),
            None => self.state.intensity_at(q),
        }
    }
}

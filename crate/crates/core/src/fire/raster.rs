use std::io::{self, Write};

use thiserror::Error;

use super::FireFrontSource;
use crate::format::sig9;
use crate::geometry::{DegenerateRect, Rect, Vec2};

/// Cell-centered intensity raster, row-major with the northernmost row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub extent: Rect,
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum RasterParseError {
    #[error("missing header row")]
    MissingHeader,
    #[error("bad header field `{0}`")]
    Header(String),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

impl Raster {
    /// Zero raster covering `extent`; the last row/column may overhang it.
    pub fn empty(extent: Rect, resolution: f64) -> Self {
        let count = |len: f64| ((len / resolution) - 1e-9).ceil().max(1.0) as usize;
        let cols = count(extent.width());
        let rows = count(extent.height());
        Self {
            extent,
            resolution,
            cols,
            rows,
            values: vec![0.0; cols * rows],
        }
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Vec2 {
        Vec2::new(
            self.extent.x_min + (col as f64 + 0.5) * self.resolution,
            self.extent.y_max - (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Header row `x_min=..,y_min=..,x_max=..,y_max=..,resolution=..`, then one
    /// line of comma-separated intensities per raster row, north first.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let e = &self.extent;
        writeln!(
            out,
            "x_min={},y_min={},x_max={},y_max={},resolution={}",
            sig9(e.x_min),
            sig9(e.y_min),
            sig9(e.x_max),
            sig9(e.y_max),
            sig9(self.resolution)
        )?;
        let mut line = String::new();
        for row in self.values.chunks(self.cols) {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&sig9(*v));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self, RasterParseError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(RasterParseError::MissingHeader)?;
        let mut fields = [f64::NAN; 5];
        let names = ["x_min", "y_min", "x_max", "y_max", "resolution"];
        for part in header.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| RasterParseError::Header(part.to_string()))?;
            let slot = names
                .iter()
                .position(|n| *n == key.trim())
                .ok_or_else(|| RasterParseError::Header(key.to_string()))?;
            fields[slot] = value
                .trim()
                .parse()
                .map_err(|_| RasterParseError::Header(part.to_string()))?;
        }
        if let Some(i) = fields.iter().position(|v| v.is_nan()) {
            return Err(RasterParseError::Header(names[i].to_string()));
        }
        let extent = Rect::new(fields[0], fields[1], fields[2], fields[3]);
        let mut raster = Raster::empty(extent, fields[4]);
        let mut rows = 0;
        for (r, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let values: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse()).collect();
            let values = values.map_err(|e| RasterParseError::Row {
                row: r,
                reason: e.to_string(),
            })?;
            if values.len() != raster.cols || r >= raster.rows {
                return Err(RasterParseError::Row {
                    row: r,
                    reason: format!("expected {} columns within {} rows", raster.cols, raster.rows),
                });
            }
            raster.values[r * raster.cols..(r + 1) * raster.cols].copy_from_slice(&values);
            rows += 1;
        }
        if rows != raster.rows {
            return Err(RasterParseError::Row {
                row: rows,
                reason: format!("expected {} rows", raster.rows),
            });
        }
        Ok(raster)
    }
}

/// Node lattice holding the summed heat field, sampled by bilinear
/// interpolation. Each source is splatted once, truncated at
/// `cutoff_sigmas` deviations, so adding sources is incremental.
#[derive(Debug, Clone)]
pub struct HeatRaster {
    extent: Rect,
    spacing: f64,
    cutoff_sigmas: f64,
    nx: usize,
    ny: usize,
    /// Row-major with row 0 at `y_min`.
    nodes: Vec<f64>,
    synced: usize,
}

impl HeatRaster {
    pub fn new(extent: Rect, spacing: f64, cutoff_sigmas: f64) -> Result<Self, DegenerateRect> {
        extent.validate()?;
        assert!(spacing > 0.0 && cutoff_sigmas > 0.0);
        let nx = (extent.width() / spacing).ceil() as usize + 1;
        let ny = (extent.height() / spacing).ceil() as usize + 1;
        let extent = Rect::new(
            extent.x_min,
            extent.y_min,
            extent.x_min + (nx - 1) as f64 * spacing,
            extent.y_min + (ny - 1) as f64 * spacing,
        );
        Ok(Self {
            extent,
            spacing,
            cutoff_sigmas,
            nx,
            ny,
            nodes: vec![0.0; nx * ny],
            synced: 0,
        })
    }

    pub fn extent(&self) -> Rect {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Splats every source past the ones already accumulated.
    pub fn sync(&mut self, sources: &[FireFrontSource]) {
        if sources.len() < self.synced {
            self.nodes.iter_mut().for_each(|v| *v = 0.0);
            self.synced = 0;
        }
        for s in &sources[self.synced..] {
            self.splat(s);
        }
        self.synced = sources.len();
    }

    fn node_window(&self, center: f64, origin: f64, reach: f64, n: usize) -> Option<(usize, usize)> {
        let lo = ((center - reach - origin) / self.spacing).ceil().max(0.0);
        let hi = ((center + reach - origin) / self.spacing)
            .floor()
            .min((n - 1) as f64);
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    fn splat(&mut self, s: &FireFrontSource) {
        let e = self.extent;
        let Some((i0, i1)) = self.node_window(s.position.x, e.x_min, self.cutoff_sigmas * s.sigma.x, self.nx)
        else {
            return;
        };
        let Some((j0, j1)) = self.node_window(s.position.y, e.y_min, self.cutoff_sigmas * s.sigma.y, self.ny)
        else {
            return;
        };
        let gauss = |coord: f64, mean: f64, sigma: f64| {
            let u = (coord - mean) / sigma;
            (-0.5 * u * u).exp()
        };
        let ex: Vec<f64> = (i0..=i1)
            .map(|i| gauss(e.x_min + i as f64 * self.spacing, s.position.x, s.sigma.x))
            .collect();
        let norm = s.normalization();
        for j in j0..=j1 {
            let wy = norm * gauss(e.y_min + j as f64 * self.spacing, s.position.y, s.sigma.y);
            let row = &mut self.nodes[j * self.nx + i0..=j * self.nx + i1];
            for (v, wx) in row.iter_mut().zip(&ex) {
                *v += wy * wx;
            }
        }
    }

    /// Bilinear sample, or `None` outside the lattice.
    pub fn sample(&self, q: Vec2) -> Option<f64> {
        if !self.extent.contains(q) {
            return None;
        }
        let fx = (q.x - self.extent.x_min) / self.spacing;
        let fy = (q.y - self.extent.y_min) / self.spacing;
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let at = |i: usize, j: usize| self.nodes[j * self.nx + i];
        let south = at(i, j) * (1.0 - tx) + at(i + 1, j) * tx;
        let north = at(i, j + 1) * (1.0 - tx) + at(i + 1, j + 1) * tx;
        Some(south * (1.0 - ty) + north * ty)
    }
}

//! Regular latitude/longitude rasters of nonnegative mass.
//!
//! [`DensityGrid`] is the universal input representation for every other
//! module: a [`GridSpec`] describing the raster geometry plus one
//! nonnegative mass value per cell. Grids are immutable once built; all
//! construction paths go through [`DensityGrid::new`], which validates the
//! mass array and caches the total as a fixed-order sum so that downstream
//! results are bit-stable.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo;

/// Default cell edge length in degrees.
pub const DEFAULT_CELL_SIZE_DEG: f64 = 0.01;

/// Magic bytes at the start of a binary grid file.
pub const VPGRID_MAGIC: &[u8; 8] = b"VPGRID01";

const VPGRID_HEADER_LEN: usize = 64;
const MAX_CELLS: usize = 1 << 30;

/// Geometry of a regular lat/lon raster.
///
/// Cell `(row, col)` spans
/// `[lat_min + row*cell_size, lat_min + (row+1)*cell_size]` in latitude and
/// `[lon_min + col*cell_size, lon_min + (col+1)*cell_size]` in longitude,
/// with row 0 at the southern edge. Grids never wrap the antimeridian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lon_min: f64,
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl GridSpec {
    pub fn new(
        lat_min: f64,
        lon_min: f64,
        cell_size: f64,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(Error::InvalidGridSpec(format!(
                "cell_size must be positive, got {cell_size}"
            )));
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidGridSpec(format!(
                "grid must have at least one row and one column, got {n_rows}x{n_cols}"
            )));
        }
        if n_rows.saturating_mul(n_cols) > MAX_CELLS {
            return Err(Error::InvalidGridSpec(format!(
                "grid of {n_rows}x{n_cols} cells exceeds the {MAX_CELLS}-cell limit"
            )));
        }
        if !lat_min.is_finite() || !lon_min.is_finite() {
            return Err(Error::InvalidGridSpec("origin must be finite".into()));
        }
        let lat_max = lat_min + cell_size * n_rows as f64;
        if lat_min < -90.0 || lat_max > 90.0 + 1e-9 {
            return Err(Error::InvalidGridSpec(format!(
                "latitude range [{lat_min}, {lat_max}] leaves [-90, 90]"
            )));
        }
        Ok(Self { lat_min, lon_min, cell_size, n_rows, n_cols })
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn lat_max(&self) -> f64 {
        self.lat_min + self.cell_size * self.n_rows as f64
    }

    pub fn lon_max(&self) -> f64 {
        self.lon_min + self.cell_size * self.n_cols as f64
    }

    pub fn mid_lat(&self) -> f64 {
        self.lat_min + self.cell_size * self.n_rows as f64 / 2.0
    }

    pub fn mid_lon(&self) -> f64 {
        self.lon_min + self.cell_size * self.n_cols as f64 / 2.0
    }

    pub fn lat_center(&self, row: usize) -> f64 {
        self.lat_min + (row as f64 + 0.5) * self.cell_size
    }

    pub fn lon_center(&self, col: usize) -> f64 {
        self.lon_min + (col as f64 + 0.5) * self.cell_size
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (self.lat_center(row), self.lon_center(col))
    }

    /// Spherical area of any cell in `row`, identical across columns.
    pub fn cell_area_km2(&self, row: usize) -> f64 {
        let bottom = self.lat_min + row as f64 * self.cell_size;
        geo::cell_area_km2(bottom, bottom + self.cell_size, self.cell_size)
    }

    /// Cell containing a point, or `None` outside the extent.
    ///
    /// A point exactly on a shared cell edge belongs to the cell with the
    /// larger row/column index; points on the top or right edge of the
    /// whole grid therefore fall outside.
    pub fn cell_of(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        let r = ((lat - self.lat_min) / self.cell_size).floor();
        let c = ((lon - self.lon_min) / self.cell_size).floor();
        if r < 0.0 || c < 0.0 || r >= self.n_rows as f64 || c >= self.n_cols as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        row * self.n_cols + col
    }
}

/// Immutable raster of nonnegative mass per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    spec: GridSpec,
    mass: Vec<f64>,
    total_mass: f64,
}

impl DensityGrid {
    /// Build a grid from a row-major mass array, validating every value.
    pub fn new(spec: GridSpec, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != spec.n_cells() {
            return Err(Error::InvalidGridSpec(format!(
                "mass array length {} does not match {}x{} grid",
                mass.len(),
                spec.n_rows,
                spec.n_cols
            )));
        }
        for (i, &v) in mass.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMass {
                    row: i / spec.n_cols,
                    col: i % spec.n_cols,
                    value: v,
                });
            }
        }
        let total_mass = mass.iter().fold(0.0, |acc, &v| acc + v);
        Ok(Self { spec, mass, total_mass })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let mass = vec![0.0; spec.n_cells()];
        Self { spec, mass, total_mass: 0.0 }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mass(&self, row: usize, col: usize) -> f64 {
        self.mass[self.spec.index(row, col)]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// Mass per km^2 of a cell, using its latitude-dependent area.
    pub fn density(&self, row: usize, col: usize) -> f64 {
        self.mass(row, col) / self.spec.cell_area_km2(row)
    }

    /// Cells with positive mass, in row-major order.
    pub fn nonzero_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n_cols = self.spec.n_cols;
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(move |(i, &v)| (i / n_cols, i % n_cols, v))
    }

    pub fn n_nonzero(&self) -> usize {
        self.mass.iter().filter(|&&v| v > 0.0).count()
    }

    /// Aggregate `factor x factor` blocks by summation, anchored at the
    /// grid origin. Edge blocks may be partial; total mass is preserved.
    pub fn decimate(&self, factor: usize) -> Result<DensityGrid> {
        if factor == 0 {
            return Err(Error::InvalidGridSpec("decimation factor must be >= 1".into()));
        }
        let spec = GridSpec::new(
            self.spec.lat_min,
            self.spec.lon_min,
            self.spec.cell_size * factor as f64,
            self.spec.n_rows.div_ceil(factor),
            self.spec.n_cols.div_ceil(factor),
        )?;
        let mut mass = vec![0.0; spec.n_cells()];
        for row in 0..self.spec.n_rows {
            for col in 0..self.spec.n_cols {
                mass[spec.index(row / factor, col / factor)] +=
                    self.mass[self.spec.index(row, col)];
            }
        }
        DensityGrid::new(spec, mass)
    }

    /// Crop to a square box of side `box_side_km` centred on a point.
    ///
    /// The box is converted to a lat/lon rectangle at the box centre's
    /// latitude and the crop keeps every cell whose centre lies inside,
    /// snapping to whole cells.
    pub fn crop_box(&self, center: (f64, f64), box_side_km: f64) -> Result<CroppedGrid> {
        if !(box_side_km > 0.0) {
            return Err(Error::InvalidSearch(format!(
                "box side must be positive, got {box_side_km} km"
            )));
        }
        let (lat_c, lon_c) = center;
        let km_per_deg = geo::EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        let half = box_side_km / 2.0;
        let dlat = half / km_per_deg;
        let dlon = half / (km_per_deg * lat_c.to_radians().cos());

        let row_range = self.center_range(self.spec.lat_min, self.spec.n_rows, lat_c - dlat, lat_c + dlat);
        let col_range = self.center_range(self.spec.lon_min, self.spec.n_cols, lon_c - dlon, lon_c + dlon);
        let (Some((r0, r1)), Some((c0, c1))) = (row_range, col_range) else {
            return Err(Error::BoxOutsideGrid);
        };

        let spec = GridSpec::new(
            self.spec.lat_min + r0 as f64 * self.spec.cell_size,
            self.spec.lon_min + c0 as f64 * self.spec.cell_size,
            self.spec.cell_size,
            r1 - r0 + 1,
            c1 - c0 + 1,
        )?;
        let mut mass = Vec::with_capacity(spec.n_cells());
        for row in r0..=r1 {
            let base = self.spec.index(row, c0);
            mass.extend_from_slice(&self.mass[base..base + spec.n_cols]);
        }
        Ok(CroppedGrid { grid: DensityGrid::new(spec, mass)?, row_offset: r0, col_offset: c0 })
    }

    /// Inclusive index range of cells whose centres fall in `[lo, hi]`
    /// along one axis, or `None` when empty.
    fn center_range(&self, min: f64, n: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let cell = self.spec.cell_size;
        let first = ((lo - min) / cell - 0.5).ceil().max(0.0);
        let last = ((hi - min) / cell - 0.5).floor().min(n as f64 - 1.0);
        if first > last || last < 0.0 || first >= n as f64 {
            return None;
        }
        Some((first as usize, last as usize))
    }

    /// Write the binary raster format: a 64-byte header (magic, origin,
    /// cell size, dimensions) followed by row-major little-endian f64 mass.
    pub fn write_vpgrid(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let mut header = [0u8; VPGRID_HEADER_LEN];
        header[..8].copy_from_slice(VPGRID_MAGIC);
        header[8..16].copy_from_slice(&self.spec.lat_min.to_le_bytes());
        header[16..24].copy_from_slice(&self.spec.lon_min.to_le_bytes());
        header[24..32].copy_from_slice(&self.spec.cell_size.to_le_bytes());
        header[32..36].copy_from_slice(&(self.spec.n_rows as u32).to_le_bytes());
        header[36..40].copy_from_slice(&(self.spec.n_cols as u32).to_le_bytes());
        w.write_all(&header)?;
        for &v in &self.mass {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_vpgrid(path: &Path) -> Result<DensityGrid> {
        let display = path.display().to_string();
        let bad = |reason: &str| Error::BadFile { path: display.clone(), reason: reason.into() };

        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; VPGRID_HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| bad("file shorter than the 64-byte header"))?;
        if &header[..8] != VPGRID_MAGIC {
            return Err(Error::BadMagic { path: display });
        }
        let f = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let u = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let (lat_min, lon_min, cell_size) = (f(8), f(16), f(24));
        let (n_rows, n_cols) = (u(32) as usize, u(36) as usize);
        let spec = GridSpec::new(lat_min, lon_min, cell_size, n_rows, n_cols)
            .map_err(|e| bad(&e.to_string()))?;

        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        if data.len() != spec.n_cells() * 8 {
            return Err(bad(&format!(
                "expected {} bytes of cell data, found {}",
                spec.n_cells() * 8,
                data.len()
            )));
        }
        let mass = data
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        DensityGrid::new(spec, mass).map_err(|e| bad(&e.to_string()))
    }

    /// Serialize every cell as CSV: `row,col,lat_center,lon_center,mass`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in 0..self.spec.n_rows {
            for col in 0..self.spec.n_cols {
                w.serialize(GridCsvRow {
                    row,
                    col,
                    lat_center: self.spec.lat_center(row),
                    lon_center: self.spec.lon_center(col),
                    mass: self.mass[self.spec.index(row, col)],
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GridCsvRow {
    row: usize,
    col: usize,
    lat_center: f64,
    lon_center: f64,
    mass: f64,
}

/// A sub-grid plus its offset in the parent raster.
#[derive(Debug, Clone)]
pub struct CroppedGrid {
    pub grid: DensityGrid,
    pub row_offset: usize,
    pub col_offset: usize,
}

impl CroppedGrid {
    /// Map a cropped-grid cell index back to parent coordinates.
    pub fn to_parent(&self, row: usize, col: usize) -> (usize, usize) {
        (row + self.row_offset, col + self.col_offset)
    }
}

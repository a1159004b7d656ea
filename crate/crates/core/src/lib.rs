//! Detection of city and regional boundaries from gridded mass data.
//!
//! The pipeline: rasterize valued polygons or weighted points onto a
//! latitude/longitude grid, sweep smallest-enclosing-mass circles to get a
//! radius-versus-fraction profile, fit a continuous piecewise-linear model
//! to that profile in log-log space, convert the fit into a concentric
//! power-law density model, and threshold the grid at a model-derived
//! density to extract boundary polygons.

pub mod boundary;
pub mod cli;
pub mod error;
pub mod geo;
pub mod grid;
pub mod ingest;
pub mod piecewise;
pub mod polygon;
pub mod ringmodel;
pub mod synth;
pub mod vp;

pub use error::{Error, Result};
pub use grid::{DensityGrid, GridSpec};
pub use vp::{SearchConstraint, VpCircle, VpProfile};

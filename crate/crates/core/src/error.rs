//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidGridSpec(String),

    #[error("invalid mass {value} at cell ({row}, {col}); mass must be finite and nonnegative")]
    InvalidMass { row: usize, col: usize, value: f64 },

    #[error("feature {index}: degenerate polygon (zero planar area)")]
    DegeneratePolygon { index: usize },

    #[error("feature {index}: {reason}")]
    MalformedFeature { index: usize, reason: String },

    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("grid has no mass")]
    EmptyGrid,

    #[error("no admissible candidate centre (constraint excludes every nonzero cell)")]
    NoCandidates,

    #[error("target fraction {fraction} of total mass is not reachable from any candidate")]
    FractionUnreachable { fraction: f64 },

    #[error("fractions must be strictly increasing and in (0, 1]")]
    BadFractions,

    #[error(
        "too few profile points ({points}) for {breakpoints} breakpoints; \
         each segment needs at least 3 points, try fewer breakpoints"
    )]
    TooFewPoints { points: usize, breakpoints: usize },

    #[error("fitted slope {slope} in segment {segment} is negative beyond tolerance")]
    NegativeSlope { segment: usize, slope: f64 },

    #[error("artifact mask with min_cells={min_cells} removed every profile entry")]
    AllMasked { min_cells: usize },

    #[error("segment {segment} slope {slope} is not positive; density model needs slopes > 1e-6")]
    NonpositiveSlope { segment: usize, slope: f64 },

    #[error("invalid ring model: {0}")]
    InvalidModel(String),

    #[error("ring model violates {kind} by {relative_error:.3e} (tolerance 1e-9)")]
    ModelInconsistent { kind: &'static str, relative_error: f64 },

    #[error("radius {r_km} km outside model support (0, {outer_km}]")]
    RadiusOutOfRange { r_km: f64, outer_km: f64 },

    #[error("ring index {index} out of bounds for model with {rings} rings")]
    RingIndexOutOfBounds { index: usize, rings: usize },

    #[error("outer ring ({radius_km} km) does not fit inside the grid extent")]
    OuterRingExceedsGrid { radius_km: f64 },

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),

    #[error("brute-force oracle limited to {limit} nonzero cells, grid has {actual}")]
    TooManyCellsForOracle { limit: usize, actual: usize },

    #[error(
        "last breakpoint radius {radius_km:.2} km reaches outside the box \
         (half side {half_side_km:.2} km); enlarge --box-side-km"
    )]
    BoxTooSmall { radius_km: f64, half_side_km: f64 },

    #[error("search box does not intersect the grid extent")]
    BoxOutsideGrid,

    #[error("invalid search: {0}")]
    InvalidSearch(String),

    #[error("boundary set is empty")]
    EmptyBoundarySet,

    #[error("{path}: not a vpgrid file (bad magic)")]
    BadMagic { path: String },

    #[error("{path}: {reason}")]
    BadFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

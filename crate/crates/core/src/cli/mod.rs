//! Command-line front end: argument parsing, config-file merging, and
//! dispatch.
//!
//! Parameter precedence is built-in defaults, then the `--config` TOML
//! file, then explicit flags. Exit status is 0 on success, 1 for usage
//! problems, 2 for data problems.

mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{OutputFormat, RunConfig};

pub use commands::{
    BreakpointReport, CompareDoc, CropMeta, FitReport, ModelReport, ProfileMeta, RegionReport,
    SegmentReport,
};

#[derive(Debug)]
pub enum CliError {
    /// Wrong invocation: missing or contradictory parameters.
    Usage(String),
    /// Bad or missing data while executing.
    Data(String),
}

impl From<crate::error::Error> for CliError {
    fn from(e: crate::error::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

#[derive(Parser)]
#[command(
    name = "vpbounds",
    version,
    about = "Detect city and regional boundaries on gridded data via smallest-mass-fraction \
             circles, piecewise power-law fits, and density thresholds"
)]
struct Cli {
    /// TOML file supplying defaults for any subcommand's parameters
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap worker threads (or set VPBOUNDS_THREADS); never changes results
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize valued polygons or weighted points onto a grid
    Rasterize(RasterizeArgs),
    /// Smallest circle containing a mass fraction f
    Circle(CircleArgs),
    /// Radius-versus-fraction sweep of smallest circles
    Profile(ProfileArgs),
    /// Piecewise-linear fit of log radius against log fraction
    Fit(FitArgs),
    /// Concentric-ring density model and threshold from a fit
    Model(ModelArgs),
    /// City boundary around a point: profile, fit, model, threshold, clusters
    Boundary(BoundaryArgs),
    /// Region-scale profile, fit, and breakpoint circles
    Region(RegionArgs),
    /// Generate synthetic grids with known structure
    Synth(SynthArgs),
    /// Re-run a city boundary under perturbed search parameters
    Fuzz(FuzzArgs),
    /// Overlap statistics between two boundary GeoJSON files
    Compare(CompareArgs),
}

macro_rules! overlay_opt {
    ($params:expr, $args:expr, $($field:ident),+ $(,)?) => {
        $( if $args.$field.is_some() { $params.$field = $args.$field; } )+
    };
}

macro_rules! overlay_val {
    ($params:expr, $args:expr, $($field:ident),+ $(,)?) => {
        $( if let Some(v) = $args.$field { $params.$field = v; } )+
    };
}

macro_rules! overlay_vec {
    ($params:expr, $args:expr, $($field:ident),+ $(,)?) => {
        $( if !$args.$field.is_empty() { $params.$field = $args.$field; } )+
    };
}

#[derive(Args)]
struct RasterizeArgs {
    /// GeoJSON FeatureCollection of Polygon/MultiPolygon features
    #[arg(long, value_name = "FILE")]
    geojson: Option<PathBuf>,
    /// Numeric property holding each feature's value; omit for value 1
    #[arg(long, value_name = "NAME")]
    value_field: Option<String>,
    /// CSV of lat,lon[,weight] points
    #[arg(long, value_name = "FILE")]
    points: Option<PathBuf>,
    /// Southern grid edge, degrees
    #[arg(long, allow_negative_numbers = true)]
    lat_min: Option<f64>,
    /// Western grid edge, degrees
    #[arg(long, allow_negative_numbers = true)]
    lon_min: Option<f64>,
    /// Cell size, degrees
    #[arg(long)]
    cell_size: Option<f64>,
    #[arg(long = "rows")]
    n_rows: Option<usize>,
    #[arg(long = "cols")]
    n_cols: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
}

impl RasterizeArgs {
    fn apply(self, p: &mut config::RasterizeParams) {
        overlay_opt!(p, self, geojson, value_field, points, lat_min, lon_min, cell_size, n_rows, n_cols, out);
        overlay_val!(p, self, format);
    }
}

#[derive(Args)]
struct CircleArgs {
    /// Input .vpgrid raster
    #[arg(long, value_name = "FILE")]
    grid: Option<PathBuf>,
    /// Mass fraction in (0, 1] the circle must contain
    #[arg(long)]
    f: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_lon: Option<f64>,
    /// Only cells within this distance of the centre may be circle centres
    #[arg(long)]
    search_radius_km: Option<f64>,
    /// Minimum cell mass for candidate centres
    #[arg(long)]
    min_candidate_mass: Option<f64>,
    /// Heuristic: search a FACTOR-times-decimated grid, then refine
    #[arg(long, value_name = "FACTOR")]
    coarse_factor: Option<usize>,
    /// Output CSV; stdout when omitted
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
}

impl CircleArgs {
    fn apply(self, p: &mut config::CircleParams) {
        overlay_opt!(p, self, grid, f, center_lat, center_lon, search_radius_km, coarse_factor, out);
        overlay_val!(p, self, min_candidate_mass);
    }
}

#[derive(Args)]
struct ProfileArgs {
    /// Input .vpgrid raster
    #[arg(long, value_name = "FILE")]
    grid: Option<PathBuf>,
    /// Output profile CSV; a .meta.json sidecar is written beside it
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
    /// Number of log-spaced fractions
    #[arg(long, value_name = "N")]
    fractions: Option<usize>,
    /// Explicit comma-separated fractions, overriding --fractions
    #[arg(long, value_name = "F1,F2,...", value_delimiter = ',')]
    f_list: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_lon: Option<f64>,
    /// Only cells within this distance of the centre may be circle centres
    #[arg(long)]
    search_radius_km: Option<f64>,
    /// Crop the grid to a box of this side around the centre first
    #[arg(long)]
    box_side_km: Option<f64>,
    /// Minimum cell mass for candidate centres
    #[arg(long)]
    min_candidate_mass: Option<f64>,
    /// Heuristic: search a FACTOR-times-decimated grid, then refine
    #[arg(long, value_name = "FACTOR")]
    coarse_factor: Option<usize>,
}

impl ProfileArgs {
    fn apply(self, p: &mut config::ProfileParams) {
        overlay_opt!(p, self, grid, out, center_lat, center_lon, search_radius_km, box_side_km, coarse_factor);
        overlay_val!(p, self, min_candidate_mass);
        if let Some(n) = self.fractions {
            p.fractions = n;
        }
        overlay_vec!(p, self, f_list);
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input profile CSV (from the profile subcommand)
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Output fit report JSON
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
    /// Number of interior breakpoints to fit
    #[arg(long, value_name = "K")]
    breakpoints: Option<usize>,
    /// Print residual sums for 0..=scan-max breakpoints and exit unless
    /// --breakpoints is also given
    #[arg(long)]
    scan: bool,
    #[arg(long, value_name = "K")]
    scan_max: Option<usize>,
    /// Drop leading profile entries spanning fewer cells than this
    #[arg(long, value_name = "N")]
    mask_min_cells: Option<usize>,
    /// Also drop entries with f below this fraction
    #[arg(long, value_name = "F")]
    mask_low_f: Option<f64>,
    /// Total mass override when the profile lacks a .meta.json sidecar
    #[arg(long)]
    total_mass: Option<f64>,
}

impl FitArgs {
    fn apply(self, p: &mut config::FitParams) {
        overlay_opt!(p, self, profile, out, breakpoints, mask_low_f, total_mass);
        overlay_val!(p, self, scan_max, mask_min_cells);
        if self.scan {
            p.scan = true;
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Input fit report JSON
    #[arg(long, value_name = "FILE")]
    fit: Option<PathBuf>,
    /// Output model report JSON
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
    /// Total mass override when the fit report carries none
    #[arg(long)]
    total_mass: Option<f64>,
    /// Ring whose outer edge defines the threshold (default second outermost)
    #[arg(long, value_name = "B")]
    threshold_ring: Option<usize>,
}

impl ModelArgs {
    fn apply(self, p: &mut config::ModelParams) {
        overlay_opt!(p, self, fit, out, total_mass, threshold_ring);
    }
}

#[derive(Args)]
struct BoundaryArgs {
    /// Input .vpgrid raster
    #[arg(long, value_name = "FILE")]
    grid: Option<PathBuf>,
    /// Output boundary GeoJSON
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
    /// Approximate city centre
    #[arg(long, allow_negative_numbers = true)]
    center_lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_lon: Option<f64>,
    /// Breakpoints for the internal fit; ignored with --model
    #[arg(long, value_name = "K")]
    breakpoints: Option<usize>,
    /// Analysis box side (30 km suits most cities, 50 km sprawling ones)
    #[arg(long)]
    box_side_km: Option<f64>,
    /// Circle centres stay within this distance of the query point
    #[arg(long)]
    search_radius_km: Option<f64>,
    /// Cluster connectivity: 4 or 8
    #[arg(long)]
    connectivity: Option<u8>,
    /// Use a model report JSON instead of fitting here
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
}

impl BoundaryArgs {
    fn apply(self, p: &mut config::BoundaryParams) {
        overlay_opt!(p, self, grid, out, center_lat, center_lon, breakpoints, model);
        overlay_val!(p, self, box_side_km, search_radius_km, connectivity);
    }
}

#[derive(Args)]
struct RegionArgs {
    /// Input .vpgrid raster
    #[arg(long, value_name = "FILE")]
    grid: Option<PathBuf>,
    /// Output region report JSON
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
    /// Number of interior breakpoints to fit
    #[arg(long, value_name = "K")]
    breakpoints: Option<usize>,
    /// Also write the profile CSV here
    #[arg(long, value_name = "FILE")]
    profile_out: Option<PathBuf>,
}

impl RegionArgs {
    fn apply(self, p: &mut config::RegionParams) {
        overlay_opt!(p, self, grid, out, breakpoints, profile_out);
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    kind: SynthKind,
}

#[derive(Subcommand)]
enum SynthKind {
    /// City of concentric power-law rings
    RingCity(RingCityArgs),
    /// Uniform plain with uniform discs stamped on top
    Discs(DiscsArgs),
}

#[derive(Args)]
struct GridGeometryArgs {
    /// Southern grid edge, degrees
    #[arg(long, allow_negative_numbers = true)]
    lat_min: Option<f64>,
    /// Western grid edge, degrees
    #[arg(long, allow_negative_numbers = true)]
    lon_min: Option<f64>,
    /// Cell size, degrees
    #[arg(long)]
    cell_size: Option<f64>,
    #[arg(long = "rows")]
    n_rows: Option<usize>,
    #[arg(long = "cols")]
    n_cols: Option<usize>,
}

#[derive(Args)]
struct RingCityArgs {
    #[command(flatten)]
    geometry: GridGeometryArgs,
    #[arg(long, allow_negative_numbers = true)]
    center_lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_lon: Option<f64>,
    /// Ring as OUTER_RADIUS_KM:EXPONENT, repeated from the centre outwards
    #[arg(long = "ring", value_name = "R:A", value_parser = parse_ring_arg, allow_hyphen_values = true)]
    rings: Vec<(f64, f64)>,
    #[arg(long)]
    total_mass: Option<f64>,
    /// Multiplicative lognormal noise level (0 disables noise)
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// profile-exact (log-log-linear profile) or density-continuous
    #[arg(long, value_name = "RULE")]
    coefficient_rule: Option<String>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
}

impl RingCityArgs {
    fn apply(self, p: &mut config::SynthParams) {
        p.kind = Some("ring-city".to_string());
        let g = self.geometry;
        overlay_opt!(p, g, lat_min, lon_min, cell_size, n_rows, n_cols);
        overlay_opt!(p, self, center_lat, center_lon, total_mass, out);
        overlay_val!(p, self, noise_sigma, seed, coefficient_rule, format);
        overlay_vec!(p, self, rings);
    }
}

#[derive(Args)]
struct DiscsArgs {
    #[command(flatten)]
    geometry: GridGeometryArgs,
    /// Background density of the plain, mass per km2
    #[arg(long)]
    plain_density: Option<f64>,
    /// Disc as LAT:LON:RADIUS_KM:DENSITY, repeatable
    #[arg(long = "disc", value_name = "LAT:LON:R:D", value_parser = parse_disc_arg, allow_hyphen_values = true)]
    discs: Vec<(f64, f64, f64, f64)>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
}

impl DiscsArgs {
    fn apply(self, p: &mut config::SynthParams) {
        p.kind = Some("discs".to_string());
        let g = self.geometry;
        overlay_opt!(p, g, lat_min, lon_min, cell_size, n_rows, n_cols);
        overlay_opt!(p, self, plain_density, out);
        overlay_val!(p, self, format);
        overlay_vec!(p, self, discs);
    }
}

#[derive(Args)]
struct FuzzArgs {
    /// Input .vpgrid raster
    #[arg(long, value_name = "FILE")]
    grid: Option<PathBuf>,
    /// Output inclusion-frequency CSV; per-run GeoJSONs are written beside it
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    center_lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    center_lon: Option<f64>,
    #[arg(long, value_name = "K")]
    breakpoints: Option<usize>,
    /// Cluster connectivity: 4 or 8
    #[arg(long)]
    connectivity: Option<u8>,
    /// Centre offset as DLAT:DLON degrees, repeatable
    #[arg(long = "offset", value_name = "DLAT:DLON", value_parser = parse_offset_arg, allow_hyphen_values = true)]
    offsets_deg: Vec<(f64, f64)>,
    /// Search radius to try, repeatable
    #[arg(long = "radius-km", value_name = "KM")]
    radii_km: Vec<f64>,
    /// Box side to try, repeatable
    #[arg(long = "box-side-km", value_name = "KM")]
    box_sides_km: Vec<f64>,
}

impl FuzzArgs {
    fn apply(self, p: &mut config::FuzzParams) {
        overlay_opt!(p, self, grid, out, center_lat, center_lon, breakpoints);
        overlay_val!(p, self, connectivity);
        overlay_vec!(p, self, offsets_deg, radii_km, box_sides_km);
    }
}

#[derive(Args)]
struct CompareArgs {
    /// First boundary GeoJSON
    #[arg(long, value_name = "FILE")]
    a: Option<PathBuf>,
    /// Second boundary GeoJSON
    #[arg(long, value_name = "FILE")]
    b: Option<PathBuf>,
    /// Sampling grid resolution, degrees
    #[arg(long)]
    cell_size: Option<f64>,
    /// Explicit sampling extent; omit all four for automatic bounding box
    #[arg(long, allow_negative_numbers = true)]
    lat_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lon_min: Option<f64>,
    #[arg(long = "rows")]
    n_rows: Option<usize>,
    #[arg(long = "cols")]
    n_cols: Option<usize>,
    /// Output JSON; stdout when omitted
    #[arg(long, short = 'o', value_name = "FILE")]
    out: Option<PathBuf>,
}

impl CompareArgs {
    fn apply(self, p: &mut config::CompareParams) {
        overlay_opt!(p, self, a, b, lat_min, lon_min, n_rows, n_cols, out);
        overlay_val!(p, self, cell_size);
    }
}

fn parse_ring_arg(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("expected OUTER_RADIUS_KM:EXPONENT, got {s:?}"));
    }
    let radius = parts[0].trim().parse::<f64>().map_err(|e| format!("radius: {e}"))?;
    let exponent = parts[1].trim().parse::<f64>().map_err(|e| format!("exponent: {e}"))?;
    Ok((radius, exponent))
}

fn parse_disc_arg(s: &str) -> Result<(f64, f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("expected LAT:LON:RADIUS_KM:DENSITY, got {s:?}"));
    }
    let mut nums = [0.0; 4];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|e| format!("{part:?}: {e}"))?;
    }
    Ok((nums[0], nums[1], nums[2], nums[3]))
}

fn parse_offset_arg(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("expected DLAT:DLON, got {s:?}"));
    }
    let dlat = parts[0].trim().parse::<f64>().map_err(|e| format!("dlat: {e}"))?;
    let dlon = parts[1].trim().parse::<f64>().map_err(|e| format!("dlon: {e}"))?;
    Ok((dlat, dlon))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.or_else(|| {
        std::env::var("VPBOUNDS_THREADS").ok().and_then(|s| s.parse().ok()).filter(|&n| n > 0)
    });
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Ignore the error: a pool may already exist when run() is called
        // twice in one process, and the first pool then stays in effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let file = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };

    match cli.command {
        Command::Rasterize(args) => {
            let mut p = file.rasterize.unwrap_or_default();
            args.apply(&mut p);
            commands::rasterize(p, threads)
        }
        Command::Circle(args) => {
            let mut p = file.circle.unwrap_or_default();
            args.apply(&mut p);
            commands::circle(p, threads)
        }
        Command::Profile(args) => {
            let mut p = file.profile.unwrap_or_default();
            args.apply(&mut p);
            commands::profile(p, threads)
        }
        Command::Fit(args) => {
            let mut p = file.fit.unwrap_or_default();
            args.apply(&mut p);
            commands::fit(p, threads)
        }
        Command::Model(args) => {
            let mut p = file.model.unwrap_or_default();
            args.apply(&mut p);
            commands::model(p, threads)
        }
        Command::Boundary(args) => {
            let mut p = file.boundary.unwrap_or_default();
            args.apply(&mut p);
            commands::boundary(p, threads)
        }
        Command::Region(args) => {
            let mut p = file.region.unwrap_or_default();
            args.apply(&mut p);
            commands::region(p, threads)
        }
        Command::Synth(args) => {
            let mut p = file.synth.unwrap_or_default();
            match args.kind {
                SynthKind::RingCity(a) => a.apply(&mut p),
                SynthKind::Discs(a) => a.apply(&mut p),
            }
            commands::synth(p, threads)
        }
        Command::Fuzz(args) => {
            let mut p = file.fuzz.unwrap_or_default();
            args.apply(&mut p);
            commands::fuzz(p, threads)
        }
        Command::Compare(args) => {
            let mut p = file.compare.unwrap_or_default();
            args.apply(&mut p);
            commands::compare(p, threads)
        }
    }
}

//! Resolved run configuration.
//!
//! Precedence: built-in defaults, then values from `--config FILE`
//! (TOML, one section per subcommand), then explicit command-line flags.
//! Every command that writes files also writes the fully resolved
//! section next to its outputs, so the config plus the inputs determine
//! the outputs exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::PerturbationSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rasterize: Option<RasterizeParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circle: Option<CircleParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<FuzzParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareParams>,
}

impl RunConfig {
    pub fn load(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterizeParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geojson: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cols: Option<usize>,
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RasterizeParams {
    fn default() -> Self {
        Self {
            geojson: None,
            value_field: None,
            points: None,
            lat_min: None,
            lon_min: None,
            cell_size: None,
            n_rows: None,
            n_cols: None,
            format: OutputFormat::Binary,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_radius_km: Option<f64>,
    pub min_candidate_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_factor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for CircleParams {
    fn default() -> Self {
        Self {
            grid: None,
            f: None,
            center_lat: None,
            center_lon: None,
            search_radius_km: None,
            min_candidate_mass: 0.0,
            coarse_factor: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Number of log-spaced fractions when `f_list` is empty.
    pub fractions: usize,
    /// Explicit fraction sweep; overrides `fractions` when nonempty.
    pub f_list: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lon: Option<f64>,
    /// Constrain circle centres within this distance of the centre.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_radius_km: Option<f64>,
    /// Crop the grid to a box of this side around the centre first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_side_km: Option<f64>,
    pub min_candidate_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_factor: Option<usize>,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            grid: None,
            out: None,
            fractions: 256,
            f_list: Vec::new(),
            center_lat: None,
            center_lon: None,
            search_radius_km: None,
            box_side_km: None,
            min_candidate_mass: 0.0,
            coarse_factor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<usize>,
    /// Print residual sums for 0..=scan_max breakpoints to help choose.
    pub scan: bool,
    pub scan_max: usize,
    /// Drop leading profile entries spanning fewer cells than this.
    pub mask_min_cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_low_f: Option<f64>,
    /// Total mass override when the profile has no metadata sidecar.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_mass: Option<f64>,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            profile: None,
            out: None,
            breakpoints: None,
            scan: false,
            scan_max: 6,
            mask_min_cells: crate::piecewise::DEFAULT_MASK_MIN_CELLS,
            mask_low_f: None,
            total_mass: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_mass: Option<f64>,
    /// Ring whose outer edge defines the threshold; default second
    /// outermost.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_ring: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<usize>,
    pub box_side_km: f64,
    pub search_radius_km: f64,
    pub connectivity: u8,
    /// Use a previously fitted model report instead of fitting here.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        Self {
            grid: None,
            out: None,
            center_lat: None,
            center_lon: None,
            breakpoints: None,
            box_side_km: 30.0,
            search_radius_km: 5.0,
            connectivity: 4,
            model: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// `ring-city` or `discs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lon: Option<f64>,
    /// Ring city: (outer_radius_km, exponent) per ring.
    pub rings: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_mass: Option<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
    /// `profile-exact` or `density-continuous`.
    pub coefficient_rule: String,
    /// Discs: background density of the plain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plain_density: Option<f64>,
    /// Discs: (center_lat, center_lon, radius_km, density) per disc.
    pub discs: Vec<(f64, f64, f64, f64)>,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            kind: None,
            out: None,
            format: OutputFormat::Binary,
            lat_min: None,
            lon_min: None,
            cell_size: None,
            n_rows: None,
            n_cols: None,
            center_lat: None,
            center_lon: None,
            rings: Vec::new(),
            total_mass: None,
            noise_sigma: 0.0,
            seed: 0,
            coefficient_rule: "profile-exact".to_string(),
            plain_density: None,
            discs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_lon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<usize>,
    pub connectivity: u8,
    pub offsets_deg: Vec<(f64, f64)>,
    pub radii_km: Vec<f64>,
    pub box_sides_km: Vec<f64>,
}

impl Default for FuzzParams {
    fn default() -> Self {
        let d = PerturbationSpec::default();
        Self {
            grid: None,
            out: None,
            center_lat: None,
            center_lon: None,
            breakpoints: None,
            connectivity: 4,
            offsets_deg: d.center_offsets_deg,
            radii_km: d.search_radii_km,
            box_sides_km: d.box_sides_km,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<PathBuf>,
    /// Sampling grid resolution in degrees.
    pub cell_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for CompareParams {
    fn default() -> Self {
        Self {
            a: None,
            b: None,
            cell_size: 0.01,
            lat_min: None,
            lon_min: None,
            n_rows: None,
            n_cols: None,
            out: None,
        }
    }
}

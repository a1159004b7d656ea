//! Implementations behind the command-line subcommands. Each command
//! resolves its parameters, runs the corresponding library operations,
//! writes its outputs, and drops a resolved config plus a manifest next
//! to the primary output.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{
    BoundaryParams, CircleParams, CompareParams, FitParams, FuzzParams, ModelParams,
    OutputFormat, ProfileParams, RasterizeParams, RegionParams, RunConfig, SynthParams,
};
use super::manifest::{Manifest, Phase};
use super::CliError;
use crate::boundary::{
    apply_model_threshold, city_boundary, compare_boundaries, fuzz_boundary, polygonize,
    region_boundaries, CitySearch, Connectivity, PerturbationSpec,
};
use crate::grid::{DensityGrid, GridSpec};
use crate::ingest::{load_geojson, load_points_csv, rasterize_points};
use crate::piecewise::{fit_piecewise, fit_rss_scan, mask_artifacts, RingFit};
use crate::polygon::{rasterize_polygons, ValuedPolygon};
use crate::ringmodel::{
    model_from_fit_with_mass, threshold_density, threshold_density_outer, RingModel,
};
use crate::synth::{
    generate_plain_with_discs, generate_ring_city, CoefficientRule, DiscSpec, RingCitySpec,
};
use crate::vp::{
    default_fractions_n, read_profile_csv, vp_circle, vp_circle_coarse_to_fine, vp_profile,
    vp_profile_coarse_to_fine, write_profile_csv, CandidateRegion, SearchConstraint, VpCircle,
    VpProfile,
};

type CmdResult<T = ()> = std::result::Result<T, CliError>;

fn req<T>(v: Option<T>, what: &str) -> CmdResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing {what}; pass the flag or set it in --config")))
}

/// `p.csv` -> `p.<suffix>`, e.g. `p.config.toml`.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))?;
    writeln!(w)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CmdResult<T> {
    serde_json::from_reader(BufReader::new(open_file(path)?))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn open_file(path: &Path) -> CmdResult<File> {
    File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_grid(path: &Path) -> CmdResult<DensityGrid> {
    DensityGrid::read_vpgrid(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Write the resolved config and the manifest next to the primary output.
fn finish(
    manifest: &mut Manifest,
    out: &Path,
    resolved: &RunConfig,
    extra_outputs: &[PathBuf],
) -> CmdResult<()> {
    let config_path = sidecar(out, "config.toml");
    std::fs::write(&config_path, resolved.to_toml())?;
    manifest.config_file = config_path.display().to_string();
    manifest.add_output(out)?;
    for p in extra_outputs {
        manifest.add_output(p)?;
    }
    manifest.add_output(&config_path)?;
    manifest.write(&sidecar(out, "manifest.json"))?;
    Ok(())
}

fn write_grid(grid: &DensityGrid, out: &Path, format: OutputFormat) -> CmdResult<()> {
    match format {
        OutputFormat::Binary => grid.write_vpgrid(out)?,
        OutputFormat::Csv => grid.write_csv(BufWriter::new(File::create(out)?))?,
    }
    Ok(())
}

fn grid_geometry(
    lat_min: Option<f64>,
    lon_min: Option<f64>,
    cell_size: Option<f64>,
    n_rows: Option<usize>,
    n_cols: Option<usize>,
) -> CmdResult<GridSpec> {
    Ok(GridSpec::new(
        req(lat_min, "--lat-min")?,
        req(lon_min, "--lon-min")?,
        req(cell_size, "--cell-size")?,
        req(n_rows, "--rows")?,
        req(n_cols, "--cols")?,
    )?)
}

pub fn rasterize(p: RasterizeParams, threads: Option<usize>) -> CmdResult<()> {
    let out = req(p.out.clone(), "--out")?;
    let spec = grid_geometry(p.lat_min, p.lon_min, p.cell_size, p.n_rows, p.n_cols)?;
    let mut manifest = Manifest::new("rasterize", threads);

    let load = Phase::start("ingest");
    let grid = match (&p.geojson, &p.points) {
        (Some(path), None) => {
            manifest.add_input(path)?;
            let polys = load_geojson(path, p.value_field.as_deref())
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            rasterize_polygons(&polys, &spec)?
        }
        (None, Some(path)) => {
            manifest.add_input(path)?;
            let points = load_points_csv(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let (grid, outside) = rasterize_points(&points, &spec)?;
            if outside > 0 {
                eprintln!("note: {outside} points fell outside the grid extent");
            }
            grid
        }
        _ => return Err(CliError::Usage("pass exactly one of --geojson or --points".into())),
    };
    load.stop(&mut manifest);

    let write = Phase::start("write");
    write_grid(&grid, &out, p.format)?;
    write.stop(&mut manifest);

    println!(
        "{} x {} cells, {} nonzero, total mass {}",
        spec.n_rows,
        spec.n_cols,
        grid.n_nonzero(),
        grid.total_mass()
    );
    let resolved = RunConfig { rasterize: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &[])
}

fn circle_constraint(p: &CircleParams) -> CmdResult<SearchConstraint> {
    let candidate_region = match (p.center_lat, p.center_lon, p.search_radius_km) {
        (None, None, None) => None,
        (Some(center_lat), Some(center_lon), Some(max_distance_km)) => {
            Some(CandidateRegion { center_lat, center_lon, max_distance_km })
        }
        _ => {
            return Err(CliError::Usage(
                "--center-lat, --center-lon, and --search-radius-km go together".into(),
            ))
        }
    };
    Ok(SearchConstraint { candidate_region, min_candidate_mass: p.min_candidate_mass })
}

pub fn circle(p: CircleParams, threads: Option<usize>) -> CmdResult<()> {
    let grid_path = req(p.grid.clone(), "--grid")?;
    let f = req(p.f, "--f")?;
    let constraint = circle_constraint(&p)?;
    let mut manifest = Manifest::new("circle", threads);
    manifest.add_input(&grid_path)?;

    let grid = read_grid(&grid_path)?;
    let solve = Phase::start("solve");
    let circle = match p.coarse_factor {
        Some(factor) => vp_circle_coarse_to_fine(&grid, f, &constraint, factor)?,
        None => vp_circle(&grid, f, &constraint)?,
    };
    solve.stop(&mut manifest);

    match &p.out {
        Some(out) => {
            write_profile_csv(&[circle], BufWriter::new(File::create(out)?))?;
            println!(
                "f {}: radius {} km at ({}, {}), achieved {}, {} cells",
                circle.target_fraction,
                circle.radius_km,
                circle.center_lat,
                circle.center_lon,
                circle.achieved_fraction,
                circle.cells_included
            );
            let out = out.clone();
            let resolved = RunConfig { circle: Some(p), ..Default::default() };
            finish(&mut manifest, &out, &resolved, &[])
        }
        None => {
            let mut buf = Vec::new();
            write_profile_csv(&[circle], &mut buf)?;
            std::io::stdout().write_all(&buf)?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CropMeta {
    pub center: (f64, f64),
    pub box_side_km: f64,
    pub row_offset: usize,
    pub col_offset: usize,
    pub n_rows: usize,
    pub n_cols: usize,
}

/// Sidecar written next to a profile CSV; carries what the CSV cannot:
/// the grid it came from, the total mass, and how the search was
/// constrained, so later stages can run from the CSV alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub total_mass: f64,
    pub grid: String,
    pub constraint: SearchConstraint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<CropMeta>,
    pub n_entries: usize,
}

pub fn profile(p: ProfileParams, threads: Option<usize>) -> CmdResult<()> {
    let grid_path = req(p.grid.clone(), "--grid")?;
    let out = req(p.out.clone(), "--out")?;
    let mut manifest = Manifest::new("profile", threads);
    manifest.add_input(&grid_path)?;

    let full = read_grid(&grid_path)?;
    let (work, crop) = match p.box_side_km {
        Some(side) => {
            let lat = req(p.center_lat, "--center-lat (required with --box-side-km)")?;
            let lon = req(p.center_lon, "--center-lon (required with --box-side-km)")?;
            let cropped = full.crop_box((lat, lon), side)?;
            let spec = *cropped.grid.spec();
            let meta = CropMeta {
                center: (lat, lon),
                box_side_km: side,
                row_offset: cropped.row_offset,
                col_offset: cropped.col_offset,
                n_rows: spec.n_rows,
                n_cols: spec.n_cols,
            };
            (cropped.grid, Some(meta))
        }
        None => (full, None),
    };

    let candidate_region = match p.search_radius_km {
        None => {
            if p.center_lat.is_some() && p.box_side_km.is_none() {
                return Err(CliError::Usage(
                    "a centre needs --search-radius-km or --box-side-km to mean anything".into(),
                ));
            }
            None
        }
        Some(max_distance_km) => Some(CandidateRegion {
            center_lat: req(p.center_lat, "--center-lat (required with --search-radius-km)")?,
            center_lon: req(p.center_lon, "--center-lon (required with --search-radius-km)")?,
            max_distance_km,
        }),
    };
    let constraint =
        SearchConstraint { candidate_region, min_candidate_mass: p.min_candidate_mass };

    let fractions = if p.f_list.is_empty() {
        default_fractions_n(&work, p.fractions)?
    } else {
        p.f_list.clone()
    };

    let solve = Phase::start("solve");
    let profile = match p.coarse_factor {
        Some(factor) => vp_profile_coarse_to_fine(&work, &fractions, &constraint, factor)?,
        None => vp_profile(&work, &fractions, &constraint)?,
    };
    solve.stop(&mut manifest);

    write_profile_csv(&profile.entries, BufWriter::new(File::create(&out)?))?;
    let meta_path = sidecar(&out, "meta.json");
    let meta = ProfileMeta {
        total_mass: profile.total_mass,
        grid: grid_path.display().to_string(),
        constraint,
        crop,
        n_entries: profile.entries.len(),
    };
    write_json(&meta_path, &meta)?;

    let last = profile.entries.last().expect("profile is nonempty");
    println!(
        "{} circles, total mass {}, radius at f {} is {} km",
        profile.entries.len(),
        profile.total_mass,
        last.target_fraction,
        last.radius_km
    );
    let resolved = RunConfig { profile: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &[meta_path])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentReport {
    pub slope: f64,
    pub logf_range: (f64, f64),
    pub f_range: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreakpointReport {
    pub logf: f64,
    pub f: f64,
    pub radius_km: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub fit: RingFit,
    /// Carried from the profile metadata when available; the model stage
    /// needs it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_mass: Option<f64>,
    pub profile_path: String,
    pub n_points_fitted: usize,
    pub mask_min_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_low_f: Option<f64>,
    pub segments: Vec<SegmentReport>,
    pub breakpoints: Vec<BreakpointReport>,
    pub rss: f64,
}

fn build_fit_report(
    fit: RingFit,
    total_mass: Option<f64>,
    profile_path: &Path,
    n_entries: usize,
    p: &FitParams,
) -> FitReport {
    let mut edges = vec![fit.fit_range_logf.0];
    edges.extend_from_slice(&fit.breakpoints_logf);
    edges.push(fit.fit_range_logf.1);
    let segments = fit
        .slopes
        .iter()
        .enumerate()
        .map(|(j, &slope)| SegmentReport {
            slope,
            logf_range: (edges[j], edges[j + 1]),
            f_range: (edges[j].exp(), edges[j + 1].exp()),
        })
        .collect();
    let breakpoints = fit
        .breakpoints_logf
        .iter()
        .zip(fit.breakpoints_as_fractions())
        .map(|(&logf, (f, radius_km))| BreakpointReport { logf, f, radius_km })
        .collect();
    FitReport {
        rss: fit.rss,
        n_points_fitted: n_entries - fit.excluded_low_f,
        mask_min_cells: p.mask_min_cells,
        mask_low_f: p.mask_low_f,
        total_mass,
        profile_path: profile_path.display().to_string(),
        segments,
        breakpoints,
        fit,
    }
}

pub fn fit(p: FitParams, threads: Option<usize>) -> CmdResult<()> {
    let profile_path = req(p.profile.clone(), "--profile")?;
    let mut manifest = Manifest::new("fit", threads);
    manifest.add_input(&profile_path)?;

    let entries = read_profile_csv(BufReader::new(open_file(&profile_path)?))
        .map_err(|e| CliError::Data(format!("{}: {e}", profile_path.display())))?;
    let meta_path = sidecar(&profile_path, "meta.json");
    let meta: Option<ProfileMeta> = if meta_path.is_file() {
        manifest.add_input(&meta_path)?;
        Some(read_json(&meta_path)?)
    } else {
        None
    };
    let total_mass = p.total_mass.or(meta.map(|m| m.total_mass));
    let n_entries = entries.len();
    let profile = VpProfile { entries, total_mass: total_mass.unwrap_or(f64::NAN) };
    let masked = mask_artifacts(&profile, p.mask_min_cells)?;

    if p.scan {
        let scan = Phase::start("scan");
        let table = fit_rss_scan(&masked, p.scan_max, p.mask_low_f)?;
        scan.stop(&mut manifest);
        println!("breakpoints  rss");
        for (k, rss) in &table {
            println!("{k:>11}  {rss:.6e}");
        }
    }

    let Some(k) = p.breakpoints else {
        if !p.scan {
            return Err(CliError::Usage(
                "pass --breakpoints K to fit, or --scan to inspect residuals first".into(),
            ));
        }
        if p.out.is_some() {
            return Err(CliError::Usage("--out needs --breakpoints".into()));
        }
        return Ok(());
    };
    let out = req(p.out.clone(), "--out")?;

    let solve = Phase::start("fit");
    let mut fit = fit_piecewise(&masked, k, p.mask_low_f)?;
    fit.excluded_low_f += n_entries - masked.entries.len();
    solve.stop(&mut manifest);

    let report = build_fit_report(fit, total_mass, &profile_path, n_entries, &p);
    write_json(&out, &report)?;

    println!("{} segments, rss {:.6e}", report.fit.n_segments, report.rss);
    for s in &report.segments {
        println!(
            "  slope {:.6} over f {:.6} .. {:.6}",
            s.slope, s.f_range.0, s.f_range.1
        );
    }
    for b in &report.breakpoints {
        println!("  breakpoint at f {:.6}, radius {:.3} km", b.f, b.radius_km);
    }
    let resolved = RunConfig { fit: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &[])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: RingModel,
    pub threshold_ring: usize,
    pub threshold_density: f64,
    /// Same edge evaluated with the next ring outward, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_density_outer: Option<f64>,
    pub extrapolation_note: String,
}

pub fn model(p: ModelParams, threads: Option<usize>) -> CmdResult<()> {
    let fit_path = req(p.fit.clone(), "--fit")?;
    let out = req(p.out.clone(), "--out")?;
    let mut manifest = Manifest::new("model", threads);
    manifest.add_input(&fit_path)?;

    let report: FitReport = read_json(&fit_path)?;
    let total_mass = req(
        p.total_mass.or(report.total_mass),
        "total mass (the profile had no metadata sidecar; pass --total-mass)",
    )?;

    let model = model_from_fit_with_mass(&report.fit, total_mass)?;
    let b = p.threshold_ring.unwrap_or_else(|| model.default_threshold_ring());
    let rho0 = threshold_density(&model, b)?;
    let outer = threshold_density_outer(&model, b).ok();
    let extrapolation_note = if model.extrapolated_km > 0.0 {
        format!(
            "outer radius extrapolated {:.3} km beyond the largest fitted radius",
            model.extrapolated_km
        )
    } else {
        "outer radius reached within the fitted profile".to_string()
    };

    let doc = ModelReport {
        model,
        threshold_ring: b,
        threshold_density: rho0,
        threshold_density_outer: outer,
        extrapolation_note,
    };
    write_json(&out, &doc)?;

    for (i, r) in doc.model.rings.iter().enumerate() {
        println!(
            "ring {i}: {:.3} .. {:.3} km, exponent {:.4}, coefficient {:.6e}",
            r.r_inner_km, r.r_outer_km, r.a, r.c
        );
    }
    println!("threshold density {rho0:.6} per km2 at ring {b}'s outer edge");
    let resolved = RunConfig { model: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &[])
}

pub fn boundary(p: BoundaryParams, threads: Option<usize>) -> CmdResult<()> {
    let grid_path = req(p.grid.clone(), "--grid")?;
    let out = req(p.out.clone(), "--out")?;
    let lat = req(p.center_lat, "--center-lat")?;
    let lon = req(p.center_lon, "--center-lon")?;
    let connectivity = Connectivity::try_from(p.connectivity).map_err(CliError::Usage)?;
    let mut manifest = Manifest::new("boundary", threads);
    manifest.add_input(&grid_path)?;

    let grid = read_grid(&grid_path)?;
    let solve = Phase::start("solve");
    let bset = match &p.model {
        Some(model_path) => {
            manifest.add_input(model_path)?;
            let doc: ModelReport = read_json(model_path)?;
            let search = CitySearch {
                approx_center: (lat, lon),
                box_side_km: p.box_side_km,
                search_radius_km: p.search_radius_km,
                n_breakpoints: doc.model.rings.len().saturating_sub(1),
                connectivity,
            };
            apply_model_threshold(&grid, &search, &doc.model)?
        }
        None => {
            let search = CitySearch {
                approx_center: (lat, lon),
                box_side_km: p.box_side_km,
                search_radius_km: p.search_radius_km,
                n_breakpoints: req(p.breakpoints, "--breakpoints (or --model)")?,
                connectivity,
            };
            city_boundary(&grid, &search)?.3
        }
    };
    solve.stop(&mut manifest);

    let geojson = polygonize(&bset)?;
    write_json(&out, &geojson)?;

    println!(
        "threshold density {:.6} per km2, {} clusters",
        bset.threshold_density,
        bset.clusters.len()
    );
    if let Some(i) = bset.principal {
        let cl = &bset.clusters[i];
        println!(
            "principal cluster label {}: {} cells, {:.3} km2, mass {}",
            cl.label,
            cl.cells.len(),
            cl.area_km2,
            cl.mass
        );
    }
    let resolved = RunConfig { boundary: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &[])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    pub fit: RingFit,
    pub total_mass: f64,
    pub breakpoints: Vec<BreakpointReport>,
    /// Smallest circle at each breakpoint fraction.
    pub circles: Vec<VpCircle>,
}

pub fn region(p: RegionParams, threads: Option<usize>) -> CmdResult<()> {
    let grid_path = req(p.grid.clone(), "--grid")?;
    let out = req(p.out.clone(), "--out")?;
    let k = req(p.breakpoints, "--breakpoints")?;
    let mut manifest = Manifest::new("region", threads);
    manifest.add_input(&grid_path)?;

    let grid = read_grid(&grid_path)?;
    let solve = Phase::start("solve");
    let (profile, fit, circles) = region_boundaries(&grid, k)?;
    solve.stop(&mut manifest);

    let breakpoints = fit
        .breakpoints_logf
        .iter()
        .zip(fit.breakpoints_as_fractions())
        .map(|(&logf, (f, radius_km))| BreakpointReport { logf, f, radius_km })
        .collect::<Vec<_>>();
    for (b, c) in breakpoints.iter().zip(&circles) {
        println!(
            "breakpoint f {:.6}: fitted radius {:.3} km, circle radius {:.3} km at ({:.4}, {:.4})",
            b.f, b.radius_km, c.radius_km, c.center_lat, c.center_lon
        );
    }

    let mut extra = Vec::new();
    if let Some(profile_out) = &p.profile_out {
        write_profile_csv(&profile.entries, BufWriter::new(File::create(profile_out)?))?;
        extra.push(profile_out.clone());
    }
    let doc =
        RegionReport { fit, total_mass: profile.total_mass, breakpoints, circles };
    write_json(&out, &doc)?;

    let resolved = RunConfig { region: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &extra)
}

fn parse_rule(s: &str) -> CmdResult<CoefficientRule> {
    match s.replace('_', "-").as_str() {
        "profile-exact" => Ok(CoefficientRule::ProfileExact),
        "density-continuous" => Ok(CoefficientRule::DensityContinuous),
        other => Err(CliError::Usage(format!(
            "coefficient rule must be profile-exact or density-continuous, got {other:?}"
        ))),
    }
}

pub fn synth(p: SynthParams, threads: Option<usize>) -> CmdResult<()> {
    let kind = req(p.kind.clone(), "synth kind (ring-city or discs)")?;
    let out = req(p.out.clone(), "--out")?;
    let spec = grid_geometry(p.lat_min, p.lon_min, p.cell_size, p.n_rows, p.n_cols)?;
    let mut manifest = Manifest::new("synth", threads);

    let generate = Phase::start("generate");
    let grid = match kind.as_str() {
        "ring-city" => {
            if p.rings.is_empty() {
                return Err(CliError::Usage("pass at least one --ring RADIUS_KM:EXPONENT".into()));
            }
            let city = RingCitySpec {
                center: (req(p.center_lat, "--center-lat")?, req(p.center_lon, "--center-lon")?),
                rings: p.rings.clone(),
                total_mass: req(p.total_mass, "--total-mass")?,
                grid: spec,
                noise_sigma: p.noise_sigma,
                coefficient_rule: parse_rule(&p.coefficient_rule)?,
            };
            manifest.seed = Some(p.seed);
            generate_ring_city(&city, p.seed)?
        }
        "discs" => {
            let discs: Vec<DiscSpec> = p
                .discs
                .iter()
                .map(|&(lat, lon, radius_km, density)| DiscSpec {
                    center: (lat, lon),
                    radius_km,
                    density,
                })
                .collect();
            generate_plain_with_discs(spec, req(p.plain_density, "--plain-density")?, &discs)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown synth kind {other:?}; use ring-city or discs"
            )))
        }
    };
    generate.stop(&mut manifest);

    write_grid(&grid, &out, p.format)?;
    println!(
        "{} x {} cells, {} nonzero, total mass {}",
        spec.n_rows,
        spec.n_cols,
        grid.n_nonzero(),
        grid.total_mass()
    );
    let resolved = RunConfig { synth: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &[])
}

pub fn fuzz(p: FuzzParams, threads: Option<usize>) -> CmdResult<()> {
    let grid_path = req(p.grid.clone(), "--grid")?;
    let out = req(p.out.clone(), "--out")?;
    let lat = req(p.center_lat, "--center-lat")?;
    let lon = req(p.center_lon, "--center-lon")?;
    let k = req(p.breakpoints, "--breakpoints")?;
    let connectivity = Connectivity::try_from(p.connectivity).map_err(CliError::Usage)?;
    let mut manifest = Manifest::new("fuzz", threads);
    manifest.add_input(&grid_path)?;

    let grid = read_grid(&grid_path)?;
    let search = CitySearch {
        approx_center: (lat, lon),
        box_side_km: 30.0,
        search_radius_km: 5.0,
        n_breakpoints: k,
        connectivity,
    };
    let perturbations = PerturbationSpec {
        center_offsets_deg: p.offsets_deg.clone(),
        search_radii_km: p.radii_km.clone(),
        box_sides_km: p.box_sides_km.clone(),
    };

    let solve = Phase::start("runs");
    let report = fuzz_boundary(&grid, &search, &perturbations)?;
    solve.stop(&mut manifest);

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&out)?));
    w.write_record(["row", "col", "lat_center", "lon_center", "inclusion_fraction"])
        .map_err(crate::error::Error::from)?;
    for fr in &report.frequencies {
        w.write_record([
            fr.row.to_string(),
            fr.col.to_string(),
            fr.lat.to_string(),
            fr.lon.to_string(),
            fr.frequency.to_string(),
        ])
        .map_err(crate::error::Error::from)?;
    }
    w.flush()?;
    drop(w);

    let mut extra = Vec::new();
    for (i, bset) in report.boundaries.iter().enumerate() {
        let path = sidecar(&out, &format!("run_{i:03}.geojson"));
        write_json(&path, &polygonize(bset)?)?;
        extra.push(path);
    }

    println!(
        "{} runs, {} succeeded, {} cells appear in at least one principal cluster",
        report.n_runs,
        report.n_successes,
        report.frequencies.len()
    );
    for failure in report.failures.iter().take(5) {
        eprintln!(
            "failed run at ({:.4}, {:.4}), box {} km, search radius {} km: {}",
            failure.run.center.0,
            failure.run.center.1,
            failure.run.box_side_km,
            failure.run.search_radius_km,
            failure.message
        );
    }
    if report.failures.len() > 5 {
        eprintln!("({} more failures omitted)", report.failures.len() - 5);
    }
    let resolved = RunConfig { fuzz: Some(p), ..Default::default() };
    finish(&mut manifest, &out, &resolved, &extra)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareDoc {
    pub jaccard: f64,
    pub area_a_km2: f64,
    pub area_b_km2: f64,
    pub area_intersection_km2: f64,
    pub grid: GridSpec,
}

fn bbox_spec(a: &[ValuedPolygon], b: &[ValuedPolygon], cell: f64) -> CmdResult<GridSpec> {
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lon = (f64::INFINITY, f64::NEG_INFINITY);
    for poly in a.iter().chain(b) {
        for &(la, lo) in &poly.exterior {
            lat = (lat.0.min(la), lat.1.max(la));
            lon = (lon.0.min(lo), lon.1.max(lo));
        }
    }
    if !lat.0.is_finite() {
        return Err(CliError::Data("boundary files contain no vertices".into()));
    }
    let n_rows = ((lat.1 - lat.0) / cell).ceil() as usize + 2;
    let n_cols = ((lon.1 - lon.0) / cell).ceil() as usize + 2;
    Ok(GridSpec::new(lat.0 - cell, lon.0 - cell, cell, n_rows, n_cols)?)
}

pub fn compare(p: CompareParams, threads: Option<usize>) -> CmdResult<()> {
    let a_path = req(p.a.clone(), "--a")?;
    let b_path = req(p.b.clone(), "--b")?;
    let extent = match (p.lat_min, p.lon_min, p.n_rows, p.n_cols) {
        (Some(la), Some(lo), Some(rows), Some(cols)) => Some((la, lo, rows, cols)),
        (None, None, None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "give all of --lat-min --lon-min --rows --cols, or none for automatic extent"
                    .into(),
            ))
        }
    };
    let mut manifest = Manifest::new("compare", threads);
    manifest.add_input(&a_path)?;
    manifest.add_input(&b_path)?;

    let a = load_geojson(&a_path, None)
        .map_err(|e| CliError::Data(format!("{}: {e}", a_path.display())))?;
    let b = load_geojson(&b_path, None)
        .map_err(|e| CliError::Data(format!("{}: {e}", b_path.display())))?;
    let spec = match extent {
        Some((la, lo, rows, cols)) => GridSpec::new(la, lo, p.cell_size, rows, cols)?,
        None => bbox_spec(&a, &b, p.cell_size)?,
    };

    let solve = Phase::start("compare");
    let report = compare_boundaries(&a, &b, &spec)?;
    solve.stop(&mut manifest);

    let doc = CompareDoc {
        jaccard: report.jaccard,
        area_a_km2: report.area_a_km2,
        area_b_km2: report.area_b_km2,
        area_intersection_km2: report.area_intersection_km2,
        grid: spec,
    };
    match &p.out {
        Some(out) => {
            write_json(out, &doc)?;
            println!("jaccard {:.6}", doc.jaccard);
            let out = out.clone();
            let resolved = RunConfig { compare: Some(p), ..Default::default() };
            finish(&mut manifest, &out, &resolved, &[])
        }
        None => {
            let text = serde_json::to_string_pretty(&doc)
                .map_err(|e| CliError::Data(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

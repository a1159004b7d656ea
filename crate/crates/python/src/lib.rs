//! Python bindings for the vpbounds library.
//!
//! Exposes grids, smallest-fraction circles, piecewise log-log fits,
//! concentric-ring density models, and threshold boundaries. Values
//! cross the boundary as plain Python lists and tuples.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use vpbounds::boundary::{
    city_boundary, compare_boundaries, fuzz_boundary, polygonize, BoundarySet, CitySearch,
    Connectivity, PerturbationSpec,
};
use vpbounds::grid::{DensityGrid, GridSpec};
use vpbounds::piecewise::{fit_piecewise, mask_artifacts, RingFit, DEFAULT_MASK_MIN_CELLS};
use vpbounds::polygon::ValuedPolygon;
use vpbounds::ringmodel::{
    model_from_fit_with_mass, threshold_density, threshold_density_outer, RingModel,
};
use vpbounds::synth::{
    generate_plain_with_discs, generate_ring_city, CoefficientRule, DiscSpec, RingCitySpec,
};
use vpbounds::vp::{
    default_fractions_n, vp_circle, vp_profile, SearchConstraint, VpCircle, VpProfile,
};

fn to_py(e: vpbounds::error::Error) -> PyErr {
    match e {
        vpbounds::error::Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn constraint_from(
    center: Option<(f64, f64)>,
    search_radius_km: Option<f64>,
    min_candidate_mass: f64,
) -> PyResult<SearchConstraint> {
    let mut c = match (center, search_radius_km) {
        (Some((lat, lon)), Some(r)) => SearchConstraint::within_km(lat, lon, r),
        (None, None) => SearchConstraint::default(),
        _ => {
            return Err(PyValueError::new_err(
                "center and search_radius_km must be given together",
            ))
        }
    };
    c.min_candidate_mass = min_candidate_mass;
    Ok(c)
}

fn connectivity_from(n: u8) -> PyResult<Connectivity> {
    Connectivity::try_from(n).map_err(PyValueError::new_err)
}

/// Gridded nonnegative mass on a lat/lon raster.
#[pyclass(module = "vpbounds_py", skip_from_py_object)]
#[derive(Clone)]
pub struct Grid {
    inner: DensityGrid,
}

#[pymethods]
impl Grid {
    /// Build from row-major nested lists; rows run south to north.
    #[new]
    fn new(lat_min: f64, lon_min: f64, cell_size: f64, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(PyValueError::new_err("all rows must have the same length"));
        }
        let spec = GridSpec::new(lat_min, lon_min, cell_size, n_rows, n_cols).map_err(to_py)?;
        let mass: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(Self { inner: DensityGrid::new(spec, mass).map_err(to_py)? })
    }

    /// Load a .vpgrid binary raster.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: DensityGrid::read_vpgrid(&path).map_err(to_py)? })
    }

    /// Write a .vpgrid binary raster.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_vpgrid(&path).map_err(to_py)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.spec().n_rows
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.spec().n_cols
    }

    #[getter]
    fn lat_min(&self) -> f64 {
        self.inner.spec().lat_min
    }

    #[getter]
    fn lon_min(&self) -> f64 {
        self.inner.spec().lon_min
    }

    #[getter]
    fn cell_size(&self) -> f64 {
        self.inner.spec().cell_size
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    fn mass(&self, row: usize, col: usize) -> PyResult<f64> {
        let s = self.inner.spec();
        if row >= s.n_rows || col >= s.n_cols {
            return Err(PyIndexError::new_err(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                s.n_rows, s.n_cols
            )));
        }
        Ok(self.inner.mass(row, col))
    }

    /// Centre of a cell as (lat, lon).
    fn cell_center(&self, row: usize, col: usize) -> PyResult<(f64, f64)> {
        let s = self.inner.spec();
        if row >= s.n_rows || col >= s.n_cols {
            return Err(PyIndexError::new_err(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                s.n_rows, s.n_cols
            )));
        }
        Ok(s.cell_center(row, col))
    }

    /// Row-major nested lists of cell masses.
    fn to_rows(&self) -> Vec<Vec<f64>> {
        let s = self.inner.spec();
        (0..s.n_rows)
            .map(|r| (0..s.n_cols).map(|c| self.inner.mass(r, c)).collect())
            .collect()
    }

    /// Smallest circle containing at least fraction `f` of the mass.
    #[pyo3(signature = (f, center=None, search_radius_km=None, min_candidate_mass=0.0))]
    fn circle(
        &self,
        f: f64,
        center: Option<(f64, f64)>,
        search_radius_km: Option<f64>,
        min_candidate_mass: f64,
    ) -> PyResult<Circle> {
        let c = constraint_from(center, search_radius_km, min_candidate_mass)?;
        Ok(Circle { inner: vp_circle(&self.inner, f, &c).map_err(to_py)? })
    }

    /// Smallest circles over a fraction sweep; `fractions` overrides the
    /// `n` log-spaced defaults.
    #[pyo3(signature = (fractions=None, n=256, center=None, search_radius_km=None, min_candidate_mass=0.0))]
    fn profile(
        &self,
        fractions: Option<Vec<f64>>,
        n: usize,
        center: Option<(f64, f64)>,
        search_radius_km: Option<f64>,
        min_candidate_mass: f64,
    ) -> PyResult<Vec<Circle>> {
        let c = constraint_from(center, search_radius_km, min_candidate_mass)?;
        let fr = match fractions {
            Some(v) => v,
            None => default_fractions_n(&self.inner, n).map_err(to_py)?,
        };
        let prof = vp_profile(&self.inner, &fr, &c).map_err(to_py)?;
        Ok(prof.entries.into_iter().map(|inner| Circle { inner }).collect())
    }

    /// Full city workflow around a point; returns
    /// (profile, fit, model, boundary).
    #[pyo3(signature = (center_lat, center_lon, breakpoints, box_side_km=30.0, search_radius_km=5.0, connectivity=4))]
    fn city_boundary(
        &self,
        center_lat: f64,
        center_lon: f64,
        breakpoints: usize,
        box_side_km: f64,
        search_radius_km: f64,
        connectivity: u8,
    ) -> PyResult<(Vec<Circle>, Fit, Model, Boundary)> {
        let search = CitySearch {
            approx_center: (center_lat, center_lon),
            box_side_km,
            search_radius_km,
            n_breakpoints: breakpoints,
            connectivity: connectivity_from(connectivity)?,
        };
        let (profile, fit, model, bset) = city_boundary(&self.inner, &search).map_err(to_py)?;
        let total_mass = profile.total_mass;
        Ok((
            profile.entries.into_iter().map(|inner| Circle { inner }).collect(),
            Fit { inner: fit, total_mass: Some(total_mass) },
            Model { inner: model },
            Boundary { inner: bset },
        ))
    }

    /// Re-run the city workflow under perturbed search parameters and
    /// count per-cell inclusion in the principal cluster.
    #[pyo3(signature = (center_lat, center_lon, breakpoints, offsets_deg=None, search_radii_km=None, box_sides_km=None, connectivity=4))]
    #[allow(clippy::too_many_arguments)]
    fn fuzz(
        &self,
        center_lat: f64,
        center_lon: f64,
        breakpoints: usize,
        offsets_deg: Option<Vec<(f64, f64)>>,
        search_radii_km: Option<Vec<f64>>,
        box_sides_km: Option<Vec<f64>>,
        connectivity: u8,
    ) -> PyResult<FuzzResult> {
        let search = CitySearch {
            approx_center: (center_lat, center_lon),
            box_side_km: 30.0,
            search_radius_km: 5.0,
            n_breakpoints: breakpoints,
            connectivity: connectivity_from(connectivity)?,
        };
        let mut pert = PerturbationSpec::default();
        if let Some(v) = offsets_deg {
            pert.center_offsets_deg = v;
        }
        if let Some(v) = search_radii_km {
            pert.search_radii_km = v;
        }
        if let Some(v) = box_sides_km {
            pert.box_sides_km = v;
        }
        let report = fuzz_boundary(&self.inner, &search, &pert).map_err(to_py)?;
        Ok(FuzzResult {
            n_runs: report.n_runs,
            n_successes: report.n_successes,
            failures: report
                .failures
                .into_iter()
                .map(|f| {
                    (f.run.center.0, f.run.center.1, f.run.search_radius_km, f.run.box_side_km, f.message)
                })
                .collect(),
            frequencies: report
                .frequencies
                .into_iter()
                .map(|c| (c.row, c.col, c.lat, c.lon, c.frequency))
                .collect(),
            boundaries: report.boundaries.into_iter().map(|inner| Boundary { inner }).collect(),
        })
    }

    fn __repr__(&self) -> String {
        let s = self.inner.spec();
        format!(
            "Grid({}x{} cells, {:.4} deg, total mass {})",
            s.n_rows,
            s.n_cols,
            s.cell_size,
            self.inner.total_mass()
        )
    }
}

/// Smallest circle containing a target mass fraction.
#[pyclass(module = "vpbounds_py", from_py_object)]
#[derive(Clone)]
pub struct Circle {
    inner: VpCircle,
}

#[pymethods]
impl Circle {
    #[getter]
    fn f(&self) -> f64 {
        self.inner.target_fraction
    }

    #[getter]
    fn radius_km(&self) -> f64 {
        self.inner.radius_km
    }

    #[getter]
    fn center(&self) -> (f64, f64) {
        (self.inner.center_lat, self.inner.center_lon)
    }

    #[getter]
    fn achieved_fraction(&self) -> f64 {
        self.inner.achieved_fraction
    }

    #[getter]
    fn cells_included(&self) -> usize {
        self.inner.cells_included
    }

    fn __repr__(&self) -> String {
        format!(
            "Circle(f={}, radius_km={}, center=({}, {}))",
            self.inner.target_fraction,
            self.inner.radius_km,
            self.inner.center_lat,
            self.inner.center_lon
        )
    }
}

/// Continuous piecewise-linear fit of log radius against log fraction.
#[pyclass(module = "vpbounds_py", skip_from_py_object)]
#[derive(Clone)]
pub struct Fit {
    inner: RingFit,
    total_mass: Option<f64>,
}

#[pymethods]
impl Fit {
    #[getter]
    fn n_segments(&self) -> usize {
        self.inner.n_segments
    }

    #[getter]
    fn slopes(&self) -> Vec<f64> {
        self.inner.slopes.clone()
    }

    #[getter]
    fn rss(&self) -> f64 {
        self.inner.rss
    }

    #[getter]
    fn total_mass(&self) -> Option<f64> {
        self.total_mass
    }

    /// Interior knots as (fraction, radius_km) pairs.
    fn breakpoints(&self) -> Vec<(f64, f64)> {
        self.inner.breakpoints_as_fractions()
    }

    /// Fitted radius at a fraction; extrapolates beyond the fit range.
    fn radius_at(&self, f: f64) -> PyResult<f64> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(PyValueError::new_err(format!("fraction must be positive, got {f}")));
        }
        Ok(self.inner.eval_logf(f.ln()).exp())
    }

    fn __repr__(&self) -> String {
        format!(
            "Fit({} segments, slopes {:?}, rss {:.3e})",
            self.inner.n_segments, self.inner.slopes, self.inner.rss
        )
    }
}

/// Concentric-ring power-law density model.
#[pyclass(module = "vpbounds_py", skip_from_py_object)]
#[derive(Clone)]
pub struct Model {
    inner: RingModel,
}

#[pymethods]
impl Model {
    /// Rings as (r_inner_km, r_outer_km, exponent, coefficient).
    fn rings(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner.rings.iter().map(|r| (r.r_inner_km, r.r_outer_km, r.a, r.c)).collect()
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.inner.total_mass
    }

    #[getter]
    fn outer_radius_km(&self) -> f64 {
        self.inner.outer_radius_km
    }

    #[getter]
    fn extrapolated_km(&self) -> f64 {
        self.inner.extrapolated_km
    }

    /// Model density at radius r from the centre.
    fn density_at(&self, r_km: f64) -> PyResult<f64> {
        if !(r_km >= 0.0 && r_km.is_finite()) {
            return Err(PyValueError::new_err(format!("radius must be nonnegative, got {r_km}")));
        }
        let ring = self
            .inner
            .rings
            .iter()
            .find(|g| r_km <= g.r_outer_km)
            .or_else(|| self.inner.rings.last())
            .ok_or_else(|| PyValueError::new_err("model has no rings"))?;
        Ok(ring.density_at(r_km))
    }

    /// Threshold density at a ring's outer edge, default second
    /// outermost, using that ring's own power law.
    #[pyo3(signature = (ring=None))]
    fn threshold_density(&self, ring: Option<usize>) -> PyResult<f64> {
        let b = ring.unwrap_or_else(|| self.inner.default_threshold_ring());
        threshold_density(&self.inner, b).map_err(to_py)
    }

    /// Same edge, but using the next ring outward.
    #[pyo3(signature = (ring=None))]
    fn threshold_density_outer(&self, ring: Option<usize>) -> PyResult<f64> {
        let b = ring.unwrap_or_else(|| self.inner.default_threshold_ring());
        threshold_density_outer(&self.inner, b).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model({} rings, outer radius {:.3} km, total mass {})",
            self.inner.rings.len(),
            self.inner.outer_radius_km,
            self.inner.total_mass
        )
    }
}

/// One above-threshold cluster.
#[pyclass(module = "vpbounds_py", skip_from_py_object)]
#[derive(Clone)]
pub struct Cluster {
    #[pyo3(get)]
    label: u32,
    #[pyo3(get)]
    mass: f64,
    #[pyo3(get)]
    area_km2: f64,
    #[pyo3(get)]
    holes_filled: bool,
    cells: Vec<(usize, usize)>,
    exterior: Vec<(f64, f64)>,
}

#[pymethods]
impl Cluster {
    #[getter]
    fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Member cells as (row, col), row-major sorted.
    fn cells(&self) -> Vec<(usize, usize)> {
        self.cells.clone()
    }

    /// Outline corners as (lat, lon), open counterclockwise ring.
    fn exterior(&self) -> Vec<(f64, f64)> {
        self.exterior.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Cluster(label={}, n_cells={}, mass={}, area_km2={:.3})",
            self.label,
            self.cells.len(),
            self.mass,
            self.area_km2
        )
    }
}

/// Clusters above a model-derived density threshold.
#[pyclass(module = "vpbounds_py", skip_from_py_object)]
#[derive(Clone)]
pub struct Boundary {
    inner: BoundarySet,
}

#[pymethods]
impl Boundary {
    #[getter]
    fn threshold_density(&self) -> f64 {
        self.inner.threshold_density
    }

    #[getter]
    fn connectivity(&self) -> u8 {
        self.inner.connectivity.into()
    }

    /// Index into clusters() of the cluster anchored at the query point.
    #[getter]
    fn principal(&self) -> Option<usize> {
        self.inner.principal
    }

    fn clusters(&self) -> Vec<Cluster> {
        self.inner
            .clusters
            .iter()
            .map(|c| Cluster {
                label: c.label,
                mass: c.mass,
                area_km2: c.area_km2,
                holes_filled: c.holes_filled,
                cells: c.cells.clone(),
                exterior: c.exterior.clone(),
            })
            .collect()
    }

    /// The fitted model that set the threshold, when one did.
    #[getter]
    fn model(&self) -> Option<Model> {
        self.inner.model.clone().map(|inner| Model { inner })
    }

    /// GeoJSON FeatureCollection of cluster outlines.
    fn geojson(&self) -> PyResult<String> {
        let v = polygonize(&self.inner).map_err(to_py)?;
        serde_json::to_string_pretty(&v).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Cell-sampled overlap with another boundary set; returns
    /// (jaccard, area_a_km2, area_b_km2, area_intersection_km2).
    #[pyo3(signature = (other, cell_size=0.01))]
    fn compare(&self, other: &Boundary, cell_size: f64) -> PyResult<(f64, f64, f64, f64)> {
        let a = outlines(&self.inner);
        let b = outlines(&other.inner);
        let spec = bbox_spec(&a, &b, cell_size)?;
        let r = compare_boundaries(&a, &b, &spec).map_err(to_py)?;
        Ok((r.jaccard, r.area_a_km2, r.area_b_km2, r.area_intersection_km2))
    }

    fn __repr__(&self) -> String {
        format!(
            "Boundary({} clusters, threshold {:.6} per km2)",
            self.inner.clusters.len(),
            self.inner.threshold_density
        )
    }
}

fn outlines(bset: &BoundarySet) -> Vec<ValuedPolygon> {
    bset.clusters
        .iter()
        .filter(|c| !c.exterior.is_empty())
        .map(|c| ValuedPolygon { exterior: c.exterior.clone(), holes: Vec::new(), value: 1.0 })
        .collect()
}

fn bbox_spec(a: &[ValuedPolygon], b: &[ValuedPolygon], cell_size: f64) -> PyResult<GridSpec> {
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lon = (f64::INFINITY, f64::NEG_INFINITY);
    for p in a.iter().chain(b) {
        for &(la, lo) in &p.exterior {
            lat = (lat.0.min(la), lat.1.max(la));
            lon = (lon.0.min(lo), lon.1.max(lo));
        }
    }
    if !lat.0.is_finite() {
        return Err(PyValueError::new_err("both boundary sets are empty"));
    }
    let n_rows = ((lat.1 - lat.0) / cell_size).ceil() as usize + 2;
    let n_cols = ((lon.1 - lon.0) / cell_size).ceil() as usize + 2;
    GridSpec::new(lat.0 - cell_size, lon.0 - cell_size, cell_size, n_rows, n_cols).map_err(to_py)
}

/// Perturbation sweep summary.
#[pyclass(module = "vpbounds_py")]
pub struct FuzzResult {
    #[pyo3(get)]
    n_runs: usize,
    #[pyo3(get)]
    n_successes: usize,
    failures: Vec<(f64, f64, f64, f64, String)>,
    frequencies: Vec<(usize, usize, f64, f64, f64)>,
    boundaries: Vec<Boundary>,
}

#[pymethods]
impl FuzzResult {
    /// Failed runs as (center_lat, center_lon, search_radius_km,
    /// box_side_km, message).
    fn failures(&self) -> Vec<(f64, f64, f64, f64, String)> {
        self.failures.clone()
    }

    /// Per-cell inclusion as (row, col, lat, lon, frequency); the
    /// frequency is over successful runs only.
    fn frequencies(&self) -> Vec<(usize, usize, f64, f64, f64)> {
        self.frequencies.clone()
    }

    /// Boundary sets of the successful runs, in run order.
    fn boundaries(&self) -> Vec<Boundary> {
        self.boundaries.clone()
    }

    fn __repr__(&self) -> String {
        format!("FuzzResult({} runs, {} succeeded)", self.n_runs, self.n_successes)
    }
}

/// Fit a continuous piecewise power law to a circle profile.
#[pyfunction]
#[pyo3(signature = (profile, breakpoints, total_mass=None, mask_min_cells=DEFAULT_MASK_MIN_CELLS, mask_low_f=None))]
fn fit_profile(
    profile: Vec<Circle>,
    breakpoints: usize,
    total_mass: Option<f64>,
    mask_min_cells: usize,
    mask_low_f: Option<f64>,
) -> PyResult<Fit> {
    let entries: Vec<VpCircle> = profile.into_iter().map(|c| c.inner).collect();
    let n_entries = entries.len();
    let prof = VpProfile { entries, total_mass: total_mass.unwrap_or(f64::NAN) };
    let masked = mask_artifacts(&prof, mask_min_cells).map_err(to_py)?;
    let mut fit = fit_piecewise(&masked, breakpoints, mask_low_f).map_err(to_py)?;
    fit.excluded_low_f += n_entries - masked.entries.len();
    Ok(Fit { inner: fit, total_mass })
}

/// Ring model from a fit; total mass comes from the fit unless given.
#[pyfunction]
#[pyo3(signature = (fit, total_mass=None))]
fn model_from_fit(fit: &Fit, total_mass: Option<f64>) -> PyResult<Model> {
    let mass = total_mass.or(fit.total_mass).ok_or_else(|| {
        PyValueError::new_err("fit carries no total mass; pass total_mass explicitly")
    })?;
    Ok(Model { inner: model_from_fit_with_mass(&fit.inner, mass).map_err(to_py)? })
}

/// Synthetic city of concentric power-law rings; rings are
/// (outer_radius_km, exponent) from the centre outwards.
#[pyfunction]
#[pyo3(signature = (lat_min, lon_min, cell_size, n_rows, n_cols, center_lat, center_lon, rings, total_mass, noise_sigma=0.0, seed=0, coefficient_rule="profile-exact"))]
#[allow(clippy::too_many_arguments)]
fn ring_city(
    lat_min: f64,
    lon_min: f64,
    cell_size: f64,
    n_rows: usize,
    n_cols: usize,
    center_lat: f64,
    center_lon: f64,
    rings: Vec<(f64, f64)>,
    total_mass: f64,
    noise_sigma: f64,
    seed: u64,
    coefficient_rule: &str,
) -> PyResult<Grid> {
    let rule = match coefficient_rule.replace('_', "-").as_str() {
        "profile-exact" => CoefficientRule::ProfileExact,
        "density-continuous" => CoefficientRule::DensityContinuous,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown coefficient rule {other:?}; use profile-exact or density-continuous"
            )))
        }
    };
    let spec = RingCitySpec {
        center: (center_lat, center_lon),
        rings,
        total_mass,
        grid: GridSpec::new(lat_min, lon_min, cell_size, n_rows, n_cols).map_err(to_py)?,
        noise_sigma,
        coefficient_rule: rule,
    };
    Ok(Grid { inner: generate_ring_city(&spec, seed).map_err(to_py)? })
}

/// Uniform plain with uniform discs stamped on top; discs are
/// (lat, lon, radius_km, density).
#[pyfunction]
#[pyo3(signature = (lat_min, lon_min, cell_size, n_rows, n_cols, plain_density, discs=Vec::new()))]
fn plain_with_discs(
    lat_min: f64,
    lon_min: f64,
    cell_size: f64,
    n_rows: usize,
    n_cols: usize,
    plain_density: f64,
    discs: Vec<(f64, f64, f64, f64)>,
) -> PyResult<Grid> {
    let spec = GridSpec::new(lat_min, lon_min, cell_size, n_rows, n_cols).map_err(to_py)?;
    let ds: Vec<DiscSpec> = discs
        .into_iter()
        .map(|(la, lo, r, d)| DiscSpec { center: (la, lo), radius_km: r, density: d })
        .collect();
    Ok(Grid { inner: generate_plain_with_discs(spec, plain_density, &ds).map_err(to_py)? })
}

#[pymodule]
fn vpbounds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Circle>()?;
    m.add_class::<Fit>()?;
    m.add_class::<Model>()?;
    m.add_class::<Cluster>()?;
    m.add_class::<Boundary>()?;
    m.add_class::<FuzzResult>()?;
    m.add_function(wrap_pyfunction!(fit_profile, m)?)?;
    m.add_function(wrap_pyfunction!(model_from_fit, m)?)?;
    m.add_function(wrap_pyfunction!(ring_city, m)?)?;
    m.add_function(wrap_pyfunction!(plain_with_discs, m)?)?;
    Ok(())
}

//! Density thresholding, hole-free clusters, and boundary workflows.
//!
//! `cluster_above` turns a grid into labeled connected components of
//! cells denser than a threshold. Holes are closed first: any
//! below-threshold pocket that cannot reach the grid frame through
//! below-threshold cells (4-connected) is merged into the cluster around
//! it, and only then are components labeled. With 4-connected clusters
//! this also guarantees the traced outline is a simple ring; 8-connected
//! clusters may touch themselves at corners, which the tracer resolves by
//! always taking the rightmost turn.
//!
//! `city_boundary` chains the whole pipeline: crop a box around the
//! query point, sweep the profile with centres near that point, fit,
//! convert to a ring model, threshold at the model's boundary density,
//! and cluster. `region_boundaries` is the unconstrained national-scale
//! variant that reports one circle per fitted breakpoint instead of a
//! threshold map.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::grid::{DensityGrid, GridSpec};
use crate::piecewise::{fit_piecewise, mask_artifacts, RingFit, DEFAULT_MASK_MIN_CELLS};
use crate::polygon::{polygon_contains, ValuedPolygon};
use crate::ringmodel::{model_from_fit, threshold_density, RingModel};
use crate::vp::{default_fractions, vp_profile, SearchConstraint, VpCircle, VpProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

/// One connected component of above-threshold cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// 1-based, ordered by descending mass.
    pub label: u32,
    /// Row-major sorted cell indices, in the coordinates of the grid the
    /// emitting operation was handed.
    pub cells: Vec<(usize, usize)>,
    pub mass: f64,
    /// Sum of the latitude-corrected areas of the member cells.
    pub area_km2: f64,
    /// Outline corners as (lat, lon), open ring, counterclockwise.
    pub exterior: Vec<(f64, f64)>,
    /// Whether any enclosed below-threshold cells were merged in.
    pub holes_filled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySet {
    pub threshold_density: f64,
    pub connectivity: Connectivity,
    pub clusters: Vec<Cluster>,
    /// Index of the cluster anchored at the query point, when a city
    /// search produced this set.
    pub principal: Option<usize>,
    /// Model and search parameters that produced the threshold, when
    /// applicable.
    pub model: Option<RingModel>,
    pub search: Option<CitySearch>,
}

impl BoundarySet {
    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Parameters for the city workflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CitySearch {
    pub approx_center: (f64, f64),
    /// Analysis box side; 30 km suits most cities, 50 km sprawling ones.
    pub box_side_km: f64,
    /// Circle centres are constrained within this distance of the query.
    pub search_radius_km: f64,
    pub n_breakpoints: usize,
    #[serde(default)]
    pub connectivity: Connectivity,
}

impl CitySearch {
    pub fn new(lat: f64, lon: f64, n_breakpoints: usize) -> Self {
        Self {
            approx_center: (lat, lon),
            box_side_km: 30.0,
            search_radius_km: 5.0,
            n_breakpoints,
            connectivity: Connectivity::Four,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.search_radius_km > 0.0 && self.box_side_km > 0.0) {
            return Err(Error::InvalidSearch(format!(
                "box side ({} km) and search radius ({} km) must be positive",
                self.box_side_km, self.search_radius_km
            )));
        }
        if self.box_side_km <= 2.0 * self.search_radius_km {
            return Err(Error::InvalidSearch(format!(
                "box side {} km must exceed twice the search radius {} km",
                self.box_side_km, self.search_radius_km
            )));
        }
        Ok(())
    }
}

/// Label cells with density strictly above `rho0` into connected
/// clusters, merging any enclosed below-threshold pockets first.
pub fn cluster_above(
    grid: &DensityGrid,
    rho0: f64,
    connectivity: Connectivity,
) -> Result<BoundarySet> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidSearch(format!(
            "threshold density must be positive and finite, got {rho0}"
        )));
    }
    let spec = *grid.spec();
    let (rows, cols) = (spec.n_rows, spec.n_cols);
    let n = rows * cols;

    let mut mask = vec![false; n];
    for row in 0..rows {
        let area = spec.cell_area_km2(row);
        for col in 0..cols {
            mask[row * cols + col] = grid.mass(row, col) / area > rho0;
        }
    }

    // Below-threshold cells reachable from the frame, 4-connected; the
    // unreachable remainder is enclosed and gets merged.
    let reachable = flood_from_frame(&mask, rows, cols);
    let mut filled = vec![false; n];
    let mut augmented = mask;
    for i in 0..n {
        if !augmented[i] && !reachable[i] {
            augmented[i] = true;
            filled[i] = true;
        }
    }

    let labels = label_components(&augmented, rows, cols, connectivity);
    let mut by_root: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for row in 0..rows {
        for col in 0..cols {
            if let Some(root) = labels[row * cols + col] {
                by_root.entry(root).or_default().push((row, col));
            }
        }
    }

    let mut drafts: Vec<(Vec<(usize, usize)>, f64, f64, bool)> = by_root
        .into_values()
        .map(|cells| {
            let mass: f64 = cells.iter().map(|&(r, c)| grid.mass(r, c)).sum();
            let area: f64 = cells.iter().map(|&(r, _)| spec.cell_area_km2(r)).sum();
            let any_filled = cells.iter().any(|&(r, c)| filled[r * cols + c]);
            (cells, mass, area, any_filled)
        })
        .collect();
    drafts.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0[0].cmp(&b.0[0]))
    });

    let clusters = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (cells, mass, area_km2, holes_filled))| {
            let exterior = trace_exterior(&cells, &spec);
            Cluster { label: (i + 1) as u32, cells, mass, area_km2, exterior, holes_filled }
        })
        .collect();

    Ok(BoundarySet {
        threshold_density: rho0,
        connectivity,
        clusters,
        principal: None,
        model: None,
        search: None,
    })
}

fn flood_from_frame(mask: &[bool], rows: usize, cols: usize) -> Vec<bool> {
    let mut seen = vec![false; rows * cols];
    let mut queue = VecDeque::new();
    let push = |seen: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>, r: usize, c: usize| {
        let i = r * cols + c;
        if !mask[i] && !seen[i] {
            seen[i] = true;
            queue.push_back((r, c));
        }
    };
    for c in 0..cols {
        push(&mut seen, &mut queue, 0, c);
        push(&mut seen, &mut queue, rows - 1, c);
    }
    for r in 0..rows {
        push(&mut seen, &mut queue, r, 0);
        push(&mut seen, &mut queue, r, cols - 1);
    }
    while let Some((r, c)) = queue.pop_front() {
        if r > 0 {
            push(&mut seen, &mut queue, r - 1, c);
        }
        if r + 1 < rows {
            push(&mut seen, &mut queue, r + 1, c);
        }
        if c > 0 {
            push(&mut seen, &mut queue, r, c - 1);
        }
        if c + 1 < cols {
            push(&mut seen, &mut queue, r, c + 1);
        }
    }
    seen
}

/// Union-find labeling; returns for each cell the root index of its
/// component, or None when below threshold.
fn label_components(
    mask: &[bool],
    rows: usize,
    cols: usize,
    connectivity: Connectivity,
) -> Vec<Option<usize>> {
    let n = rows * cols;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let union = |parent: &mut [usize], a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            // Smaller root index wins, keeping roots deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if !mask[i] {
                continue;
            }
            if c > 0 && mask[i - 1] {
                union(&mut parent, i, i - 1);
            }
            if r > 0 && mask[i - cols] {
                union(&mut parent, i, i - cols);
            }
            if connectivity == Connectivity::Eight && r > 0 {
                if c > 0 && mask[i - cols - 1] {
                    union(&mut parent, i, i - cols - 1);
                }
                if c + 1 < cols && mask[i - cols + 1] {
                    union(&mut parent, i, i - cols + 1);
                }
            }
        }
    }
    (0..n)
        .map(|i| if mask[i] { Some(find(&mut parent, i)) } else { None })
        .collect()
}

/// Trace the outline of a cluster as a counterclockwise ring of grid
/// corners, collinear runs merged. Every exposed cell side becomes a
/// directed edge with the cluster interior on its left; following edges,
/// picking the rightmost turn at corner pinches, yields one closed ring
/// because hole filling removed every enclosed pocket.
pub(crate) fn trace_exterior(cells: &[(usize, usize)], spec: &GridSpec) -> Vec<(f64, f64)> {
    let member: BTreeSet<(usize, usize)> = cells.iter().copied().collect();
    // Directed edges between corner vertices; corner (r, c) is the
    // south-west corner of cell (r, c).
    let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for &(r, c) in cells {
        let exposed_s = r == 0 || !member.contains(&(r - 1, c));
        let exposed_n = !member.contains(&(r + 1, c));
        let exposed_w = c == 0 || !member.contains(&(r, c - 1));
        let exposed_e = !member.contains(&(r, c + 1));
        if exposed_s {
            edges.entry((r, c)).or_default().push((r, c + 1));
        }
        if exposed_e {
            edges.entry((r, c + 1)).or_default().push((r + 1, c + 1));
        }
        if exposed_n {
            edges.entry((r + 1, c + 1)).or_default().push((r + 1, c));
        }
        if exposed_w {
            edges.entry((r + 1, c)).or_default().push((r, c));
        }
    }

    let start = *edges.keys().next().expect("cluster has at least one exposed side");
    let mut ring: Vec<(usize, usize)> = Vec::new();
    let mut current = start;
    // The start vertex is the lexicographically smallest corner, whose
    // only outgoing edge heads east.
    let mut dir = 0u8; // 0 = E, 1 = N, 2 = W, 3 = S
    loop {
        ring.push(current);
        let outgoing = edges.get_mut(&current).expect("walk stays on recorded edges");
        let chosen = if outgoing.len() == 1 {
            outgoing.remove(0)
        } else {
            // Rightmost turn first, then straight, then left.
            let mut pick = None;
            for pref in [3u8, 0, 1] {
                let want = (dir + pref) % 4;
                if let Some(pos) =
                    outgoing.iter().position(|&to| edge_dir(current, to) == want)
                {
                    pick = Some(outgoing.remove(pos));
                    break;
                }
            }
            pick.expect("a continuation edge exists at every pinch")
        };
        dir = edge_dir(current, chosen);
        current = chosen;
        if current == start {
            break;
        }
    }
    debug_assert!(edges.values().all(|v| v.is_empty()), "unconsumed outline edges");

    let merged = merge_collinear(&ring);
    merged
        .into_iter()
        .map(|(r, c)| {
            (spec.lat_min + r as f64 * spec.cell_size, spec.lon_min + c as f64 * spec.cell_size)
        })
        .collect()
}

fn edge_dir(from: (usize, usize), to: (usize, usize)) -> u8 {
    if to.1 > from.1 {
        0
    } else if to.0 > from.0 {
        1
    } else if to.1 < from.1 {
        2
    } else {
        3
    }
}

fn merge_collinear(ring: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let n = ring.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = ring[(i + n - 1) % n];
        let next = ring[(i + 1) % n];
        if edge_dir(prev, ring[i]) != edge_dir(ring[i], next) {
            out.push(ring[i]);
        }
    }
    out
}

/// Render a boundary set as a GeoJSON FeatureCollection, one feature per
/// cluster with mass, area, and threshold metadata.
pub fn polygonize(bset: &BoundarySet) -> Result<Value> {
    if bset.clusters.is_empty() {
        return Err(Error::EmptyBoundarySet);
    }
    let features: Vec<Value> = bset
        .clusters
        .iter()
        .enumerate()
        .map(|(i, cl)| {
            let mut coords: Vec<Value> =
                cl.exterior.iter().map(|&(lat, lon)| json!([lon, lat])).collect();
            coords.push(coords[0].clone());
            json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": [coords] },
                "properties": {
                    "label": cl.label,
                    "mass": cl.mass,
                    "area_km2": cl.area_km2,
                    "n_cells": cl.cells.len(),
                    "holes_filled": cl.holes_filled,
                    "threshold_density": bset.threshold_density,
                    "connectivity": u8::from(bset.connectivity),
                    "is_principal": bset.principal == Some(i),
                },
            })
        })
        .collect();
    Ok(json!({ "type": "FeatureCollection", "features": features }))
}

/// Full city workflow around a query point. Returns every intermediate
/// artifact; cluster cells come back in the coordinates of the grid
/// passed in, not the internal crop.
pub fn city_boundary(
    grid: &DensityGrid,
    search: &CitySearch,
) -> Result<(VpProfile, RingFit, RingModel, BoundarySet)> {
    search.validate()?;
    let cropped = grid.crop_box(search.approx_center, search.box_side_km)?;
    let sub = &cropped.grid;
    if sub.total_mass() <= 0.0 {
        return Err(Error::EmptyGrid);
    }

    let fractions = default_fractions(sub)?;
    let constraint = SearchConstraint::within_km(
        search.approx_center.0,
        search.approx_center.1,
        search.search_radius_km,
    );
    let profile = vp_profile(sub, &fractions, &constraint)?;

    let masked = mask_artifacts(&profile, DEFAULT_MASK_MIN_CELLS)?;
    let mut fit = fit_piecewise(&masked, search.n_breakpoints, None)?;
    fit.excluded_low_f += profile.entries.len() - masked.entries.len();
    let model = model_from_fit(&fit, &profile)?;

    let bset = apply_model_threshold(grid, search, &model)?;
    Ok((profile, fit, model, bset))
}

/// Threshold-and-cluster stage of the city workflow, reusable with a
/// model fitted elsewhere; returns cluster cells in the coordinates of
/// `grid`, not the internal crop.
pub fn apply_model_threshold(
    grid: &DensityGrid,
    search: &CitySearch,
    model: &RingModel,
) -> Result<BoundarySet> {
    search.validate()?;
    let cropped = grid.crop_box(search.approx_center, search.box_side_km)?;
    let sub = &cropped.grid;

    if model.rings.len() >= 2 {
        let bp_radius = model.rings[model.rings.len() - 2].r_outer_km;
        let half_side = search.box_side_km / 2.0;
        if bp_radius > half_side {
            return Err(Error::BoxTooSmall { radius_km: bp_radius, half_side_km: half_side });
        }
    }

    let rho0 = threshold_density(model, model.default_threshold_ring())?;
    let mut bset = cluster_above(sub, rho0, search.connectivity)?;
    for cl in &mut bset.clusters {
        for cell in &mut cl.cells {
            *cell = cropped.to_parent(cell.0, cell.1);
        }
    }
    bset.principal = principal_cluster(&bset, grid, search.approx_center);
    bset.model = Some(model.clone());
    bset.search = Some(*search);
    Ok(bset)
}

/// The cluster containing the query cell, or failing that the one whose
/// mass-weighted centroid is closest to the query point.
fn principal_cluster(
    bset: &BoundarySet,
    grid: &DensityGrid,
    center: (f64, f64),
) -> Option<usize> {
    if bset.clusters.is_empty() {
        return None;
    }
    let spec = grid.spec();
    if let Some(cell) = spec.cell_of(center.0, center.1) {
        for (i, cl) in bset.clusters.iter().enumerate() {
            if cl.cells.binary_search(&cell).is_ok() {
                return Some(i);
            }
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, cl) in bset.clusters.iter().enumerate() {
        let mut lat = 0.0;
        let mut lon = 0.0;
        let mut weight = 0.0;
        for &(r, c) in &cl.cells {
            let (clat, clon) = spec.cell_center(r, c);
            let m = grid.mass(r, c);
            lat += m * clat;
            lon += m * clon;
            weight += m;
        }
        if weight <= 0.0 {
            // A cluster can in principle be all hole-filled zero-mass
            // cells; fall back to the plain mean.
            lat = cl.cells.iter().map(|&(r, c)| spec.cell_center(r, c).0).sum::<f64>();
            lon = cl.cells.iter().map(|&(r, c)| spec.cell_center(r, c).1).sum::<f64>();
            weight = cl.cells.len() as f64;
        }
        let d = haversine_km(center.0, center.1, lat / weight, lon / weight);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

/// National-scale workflow: unconstrained profile, fit, and the smallest
/// circle at each fitted breakpoint fraction.
pub fn region_boundaries(
    grid: &DensityGrid,
    n_breakpoints: usize,
) -> Result<(VpProfile, RingFit, Vec<VpCircle>)> {
    let fractions = default_fractions(grid)?;
    let unconstrained = SearchConstraint::default();
    let profile = vp_profile(grid, &fractions, &unconstrained)?;
    let masked = mask_artifacts(&profile, DEFAULT_MASK_MIN_CELLS)?;
    let mut fit = fit_piecewise(&masked, n_breakpoints, None)?;
    fit.excluded_low_f += profile.entries.len() - masked.entries.len();

    let circle_fractions: Vec<f64> =
        fit.breakpoints_as_fractions().iter().map(|&(f, _)| f).collect();
    let circles = if circle_fractions.is_empty() {
        Vec::new()
    } else {
        vp_profile(grid, &circle_fractions, &unconstrained)?.entries
    };
    Ok((profile, fit, circles))
}

/// Which perturbations of a city search to try: the cross product of
/// centre offsets, search radii, and box sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub center_offsets_deg: Vec<(f64, f64)>,
    pub search_radii_km: Vec<f64>,
    pub box_sides_km: Vec<f64>,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        let step = [-0.01, 0.0, 0.01];
        let mut center_offsets_deg = Vec::with_capacity(9);
        for &dlat in &step {
            for &dlon in &step {
                center_offsets_deg.push((dlat, dlon));
            }
        }
        Self {
            center_offsets_deg,
            search_radii_km: vec![2.0, 5.0, 8.0],
            box_sides_km: vec![40.0, 50.0, 60.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzRun {
    pub center: (f64, f64),
    pub search_radius_km: f64,
    pub box_side_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzFailure {
    pub run: FuzzRun,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellFrequency {
    pub row: usize,
    pub col: usize,
    pub lat: f64,
    pub lon: f64,
    /// Fraction of successful runs whose principal cluster included this
    /// cell.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzReport {
    pub n_runs: usize,
    pub n_successes: usize,
    pub failures: Vec<FuzzFailure>,
    pub frequencies: Vec<CellFrequency>,
    /// Boundary sets of the successful runs, in run order.
    pub boundaries: Vec<BoundarySet>,
}

/// Re-run the city workflow under every perturbation and count, per
/// cell, how often it landed inside the principal cluster. Failed runs
/// are recorded and skipped, not fatal.
pub fn fuzz_boundary(
    grid: &DensityGrid,
    search: &CitySearch,
    perturbations: &PerturbationSpec,
) -> Result<FuzzReport> {
    let mut runs = Vec::new();
    for &box_side_km in &perturbations.box_sides_km {
        for &search_radius_km in &perturbations.search_radii_km {
            for &(dlat, dlon) in &perturbations.center_offsets_deg {
                runs.push(FuzzRun {
                    center: (search.approx_center.0 + dlat, search.approx_center.1 + dlon),
                    search_radius_km,
                    box_side_km,
                });
            }
        }
    }
    if runs.is_empty() {
        return Err(Error::InvalidSearch("perturbation spec is empty".into()));
    }

    let outcomes: Vec<(FuzzRun, std::result::Result<BoundarySet, String>)> = runs
        .par_iter()
        .map(|run| {
            let s = CitySearch {
                approx_center: run.center,
                box_side_km: run.box_side_km,
                search_radius_km: run.search_radius_km,
                n_breakpoints: search.n_breakpoints,
                connectivity: search.connectivity,
            };
            let out = city_boundary(grid, &s)
                .map(|(_, _, _, bset)| bset)
                .map_err(|e| e.to_string());
            (*run, out)
        })
        .collect();

    let spec = grid.spec();
    let mut counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut boundaries = Vec::new();
    for (run, outcome) in outcomes {
        match outcome {
            Ok(bset) => {
                if let Some(p) = bset.principal {
                    for &cell in &bset.clusters[p].cells {
                        *counts.entry(cell).or_insert(0) += 1;
                    }
                }
                boundaries.push(bset);
            }
            Err(message) => failures.push(FuzzFailure { run, message }),
        }
    }
    let n_successes = boundaries.len();
    let frequencies = counts
        .into_iter()
        .map(|((row, col), count)| {
            let (lat, lon) = spec.cell_center(row, col);
            CellFrequency {
                row,
                col,
                lat,
                lon,
                frequency: count as f64 / n_successes.max(1) as f64,
            }
        })
        .collect();
    Ok(FuzzReport { n_runs: runs.len(), n_successes, failures, frequencies, boundaries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub jaccard: f64,
    pub area_a_km2: f64,
    pub area_b_km2: f64,
    pub area_intersection_km2: f64,
}

/// Compare two polygon sets by cell membership on a grid: a cell belongs
/// to a set when its centre lies inside any of the set's polygons.
pub fn compare_boundaries(
    a: &[ValuedPolygon],
    b: &[ValuedPolygon],
    spec: &GridSpec,
) -> Result<CompareReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyBoundarySet);
    }
    let mut area_a = 0.0;
    let mut area_b = 0.0;
    let mut area_both = 0.0;
    for row in 0..spec.n_rows {
        let cell_area = spec.cell_area_km2(row);
        for col in 0..spec.n_cols {
            let (lat, lon) = spec.cell_center(row, col);
            let in_a = a.iter().any(|p| polygon_contains(p, lat, lon));
            let in_b = b.iter().any(|p| polygon_contains(p, lat, lon));
            if in_a {
                area_a += cell_area;
            }
            if in_b {
                area_b += cell_area;
            }
            if in_a && in_b {
                area_both += cell_area;
            }
        }
    }
    let union = area_a + area_b - area_both;
    let jaccard = if union > 0.0 { area_both / union } else { 1.0 };
    Ok(CompareReport {
        jaccard,
        area_a_km2: area_a,
        area_b_km2: area_b,
        area_intersection_km2: area_both,
    })
}

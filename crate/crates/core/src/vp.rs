//! Smallest-circle-of-mass search.
//!
//! For a fraction `f`, the solver finds the grid-cell centre from which a
//! circle of minimal radius captures at least `f` of the grid's total
//! mass, using whole-cell inclusion: a cell is inside the circle iff its
//! centre is within the radius, so the radius is always an order statistic
//! of centre-to-centre distances.
//!
//! Determinism contract: for every candidate centre, cells are ranked by
//! `(distance, row, col)` and masses are accumulated as prefix sums in
//! exactly that order; the winner is the minimum under the total order
//! (radius, -achieved mass, row, col). Both orders are shared with the
//! exhaustive reference implementation so results agree bit for bit, and
//! the per-candidate reduction is associative and commutative, so worker
//! count and scheduling cannot change the output.
//!
//! The cost per candidate is one distance pass plus an `O(n log n)` rank;
//! a full sort is used rather than a partial selection because the
//! distance pass dominates the runtime and the sorted order doubles as the
//! canonical accumulation order for every requested fraction at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::grid::DensityGrid;

/// Result of one smallest-circle search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VpCircle {
    /// Requested mass fraction.
    #[serde(rename = "f")]
    pub target_fraction: f64,
    pub radius_km: f64,
    pub center_lat: f64,
    pub center_lon: f64,
    /// Fraction actually enclosed; can exceed the target because
    /// equidistant cells are included together.
    pub achieved_fraction: f64,
    /// Number of nonzero cells whose centres lie within the radius.
    pub cells_included: usize,
}

/// Circles for a sweep of strictly increasing fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct VpProfile {
    pub entries: Vec<VpCircle>,
    pub total_mass: f64,
}

/// Restricts which cells may serve as circle centres. Never affects which
/// cells a circle may contain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchConstraint {
    pub candidate_region: Option<CandidateRegion>,
    /// Cells below this mass are not candidate centres (all cells with
    /// positive mass are candidates by default).
    #[serde(default)]
    pub min_candidate_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateRegion {
    pub center_lat: f64,
    pub center_lon: f64,
    pub max_distance_km: f64,
}

impl SearchConstraint {
    pub fn within_km(center_lat: f64, center_lon: f64, max_distance_km: f64) -> Self {
        Self {
            candidate_region: Some(CandidateRegion { center_lat, center_lon, max_distance_km }),
            min_candidate_mass: 0.0,
        }
    }
}

#[derive(Clone, Copy)]
struct Cell {
    row: u32,
    col: u32,
    lat: f64,
    lon: f64,
    mass: f64,
}

#[derive(Clone, Copy)]
struct Best {
    radius: f64,
    achieved: f64,
    row: u32,
    col: u32,
    count: u32,
}

impl Best {
    /// Total order used to pick the winner: smaller radius, then larger
    /// achieved mass, then lower row, then lower column.
    fn beats(&self, other: &Best) -> bool {
        if self.radius != other.radius {
            return self.radius < other.radius;
        }
        if self.achieved != other.achieved {
            return self.achieved > other.achieved;
        }
        (self.row, self.col) < (other.row, other.col)
    }
}

fn collect_cells(grid: &DensityGrid) -> Vec<Cell> {
    let spec = grid.spec();
    grid.nonzero_cells()
        .map(|(row, col, mass)| Cell {
            row: row as u32,
            col: col as u32,
            lat: spec.lat_center(row),
            lon: spec.lon_center(col),
            mass,
        })
        .collect()
}

fn candidate_indices(
    cells: &[Cell],
    constraint: &SearchConstraint,
    extra: Option<&dyn Fn(usize, usize) -> bool>,
) -> Result<Vec<usize>> {
    if let Some(region) = &constraint.candidate_region {
        if !(region.max_distance_km > 0.0) {
            return Err(Error::InvalidSearch(format!(
                "candidate region radius must be positive, got {} km",
                region.max_distance_km
            )));
        }
    }
    let out: Vec<usize> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.mass >= constraint.min_candidate_mass)
        .filter(|(_, c)| match &constraint.candidate_region {
            Some(r) => {
                haversine_km(r.center_lat, r.center_lon, c.lat, c.lon) <= r.max_distance_km
            }
            None => true,
        })
        .filter(|(_, c)| match extra {
            Some(f) => f(c.row as usize, c.col as usize),
            None => true,
        })
        .map(|(i, _)| i)
        .collect();
    if out.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(out)
}

fn validate_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::BadFractions);
    }
    for (i, &f) in fractions.iter().enumerate() {
        if !(f > 0.0 && f <= 1.0) || (i > 0 && f <= fractions[i - 1]) {
            return Err(Error::BadFractions);
        }
    }
    Ok(())
}

/// Evaluate one candidate centre against every target mass, merging each
/// per-fraction result into `best`.
fn eval_candidate(
    cells: &[Cell],
    cand: &Cell,
    targets: &[f64],
    scratch: &mut Vec<(f64, u32, u32, f64)>,
    prefix: &mut Vec<f64>,
    best: &mut [Option<Best>],
) {
    scratch.clear();
    scratch.extend(cells.iter().map(|c| {
        (haversine_km(cand.lat, cand.lon, c.lat, c.lon), c.row, c.col, c.mass)
    }));
    scratch.sort_unstable_by(|a, b| {
        (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap()
    });

    prefix.clear();
    let mut acc = 0.0;
    for item in scratch.iter() {
        acc += item.3;
        prefix.push(acc);
    }
    let reachable = *prefix.last().unwrap();

    for (fi, &target) in targets.iter().enumerate() {
        // The reachable total is the same set summed in candidate-specific
        // order; clamp so f = 1 is never lost to rounding.
        let t = target.min(reachable);
        let mut k = prefix.partition_point(|&p| p < t);
        let radius = scratch[k].0;
        while k + 1 < scratch.len() && scratch[k + 1].0 == radius {
            k += 1;
        }
        let entry = Best {
            radius,
            achieved: prefix[k],
            row: cand.row,
            col: cand.col,
            count: (k + 1) as u32,
        };
        match &mut best[fi] {
            Some(b) => {
                if entry.beats(b) {
                    *b = entry;
                }
            }
            slot @ None => *slot = Some(entry),
        }
    }
}

fn merge_best(mut a: Vec<Option<Best>>, b: Vec<Option<Best>>) -> Vec<Option<Best>> {
    for (slot, other) in a.iter_mut().zip(b) {
        match (&slot, other) {
            (None, o) => *slot = o,
            (Some(cur), Some(o)) if o.beats(cur) => *slot = Some(o),
            _ => {}
        }
    }
    a
}

fn solve(
    grid: &DensityGrid,
    fractions: &[f64],
    constraint: &SearchConstraint,
    extra: Option<&(dyn Fn(usize, usize) -> bool + Sync)>,
) -> Result<VpProfile> {
    validate_fractions(fractions)?;
    let total = grid.total_mass();
    if total <= 0.0 {
        return Err(Error::EmptyGrid);
    }
    let cells = collect_cells(grid);
    let candidates = candidate_indices(
        &cells,
        constraint,
        extra.map(|f| f as &dyn Fn(usize, usize) -> bool),
    )?;
    let targets: Vec<f64> = fractions.iter().map(|&f| f * total).collect();

    let nf = fractions.len();
    let best = candidates
        .par_iter()
        .fold(
            || (vec![None; nf], Vec::with_capacity(cells.len()), Vec::with_capacity(cells.len())),
            |(mut acc, mut scratch, mut prefix), &ci| {
                eval_candidate(&cells, &cells[ci], &targets, &mut scratch, &mut prefix, &mut acc);
                (acc, scratch, prefix)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(|| vec![None; nf], merge_best);

    let spec = grid.spec();
    let entries = fractions
        .iter()
        .zip(best)
        .map(|(&f, b)| {
            let b = b.expect("candidate set is nonempty");
            VpCircle {
                target_fraction: f,
                radius_km: b.radius,
                center_lat: spec.lat_center(b.row as usize),
                center_lon: spec.lon_center(b.col as usize),
                achieved_fraction: b.achieved / total,
                cells_included: b.count as usize,
            }
        })
        .collect();
    Ok(VpProfile { entries, total_mass: total })
}

/// Smallest circle whose cells hold at least `f` of the total mass.
pub fn vp_circle(grid: &DensityGrid, f: f64, constraint: &SearchConstraint) -> Result<VpCircle> {
    Ok(solve(grid, &[f], constraint, None)?.entries[0])
}

/// One smallest circle per fraction, each solved independently; the
/// centres may move between fractions but radii are nondecreasing.
pub fn vp_profile(
    grid: &DensityGrid,
    fractions: &[f64],
    constraint: &SearchConstraint,
) -> Result<VpProfile> {
    solve(grid, fractions, constraint, None)
}

/// Default sweep: 256 log-spaced fractions from the mass share of the ten
/// heaviest cells up to 1, so the smallest circle always spans a
/// resolvable number of cells.
pub fn default_fractions(grid: &DensityGrid) -> Result<Vec<f64>> {
    default_fractions_n(grid, 256)
}

pub fn default_fractions_n(grid: &DensityGrid, n: usize) -> Result<Vec<f64>> {
    let total = grid.total_mass();
    if total <= 0.0 {
        return Err(Error::EmptyGrid);
    }
    let mut masses: Vec<(f64, usize, usize)> =
        grid.nonzero_cells().map(|(r, c, m)| (m, r, c)).collect();
    masses.sort_unstable_by(|a, b| {
        (std::cmp::Reverse(OrdF64(a.0)), a.1, a.2)
            .partial_cmp(&(std::cmp::Reverse(OrdF64(b.0)), b.1, b.2))
            .unwrap()
    });
    let top: f64 = masses.iter().take(10).map(|e| e.0).fold(0.0, |a, m| a + m);
    let f_min = (top / total).min(1.0);
    if f_min >= 1.0 {
        return Ok(vec![1.0]);
    }
    let span = f_min.ln();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let f = (span * (n - 1 - i) as f64 / (n - 1) as f64).exp();
        if out.last().is_none_or(|&prev| f > prev) {
            out.push(f);
        }
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    Ok(out)
}

#[derive(PartialEq, PartialOrd)]
struct OrdF64(f64);

/// Heuristic accelerated search: solve on a grid decimated by `factor`,
/// then redo the exact search with candidates restricted to the 3x3
/// coarse-cell neighbourhoods of the coarse winners. Much faster on large
/// grids but can return a slightly suboptimal circle when the coarse
/// optimum is far from the fine one, which is why it is off by default.
pub fn vp_profile_coarse_to_fine(
    grid: &DensityGrid,
    fractions: &[f64],
    constraint: &SearchConstraint,
    factor: usize,
) -> Result<VpProfile> {
    if factor < 2 {
        return vp_profile(grid, fractions, constraint);
    }
    let coarse = grid.decimate(factor)?;
    let mut coarse_constraint = *constraint;
    if let Some(region) = &mut coarse_constraint.candidate_region {
        // A fine candidate's mass may sit anywhere in its coarse cell, so
        // inflate the region by the coarse cell diagonal.
        let slack = grid.spec().cell_size * factor as f64
            * (crate::geo::EARTH_RADIUS_KM * std::f64::consts::PI / 180.0)
            * std::f64::consts::SQRT_2;
        region.max_distance_km += slack;
    }
    coarse_constraint.min_candidate_mass = 0.0;
    let coarse_profile = vp_profile(&coarse, fractions, &coarse_constraint)?;

    let mut windows: Vec<(usize, usize)> = coarse_profile
        .entries
        .iter()
        .map(|e| {
            coarse
                .spec()
                .cell_of(e.center_lat, e.center_lon)
                .expect("coarse centre lies on the coarse grid")
        })
        .collect();
    windows.sort_unstable();
    windows.dedup();

    let in_window = move |row: usize, col: usize| {
        let (cr, cc) = (row / factor, col / factor);
        windows.iter().any(|&(wr, wc)| {
            cr.abs_diff(wr) <= 1 && cc.abs_diff(wc) <= 1
        })
    };
    solve(grid, fractions, constraint, Some(&in_window))
}

pub fn vp_circle_coarse_to_fine(
    grid: &DensityGrid,
    f: f64,
    constraint: &SearchConstraint,
    factor: usize,
) -> Result<VpCircle> {
    Ok(vp_profile_coarse_to_fine(grid, &[f], constraint, factor)?.entries[0])
}

/// Write profile rows as CSV:
/// `f,radius_km,center_lat,center_lon,achieved_fraction,cells_included`.
pub fn write_profile_csv<W: std::io::Write>(entries: &[VpCircle], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile_csv<R: std::io::Read>(reader: R) -> Result<Vec<VpCircle>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

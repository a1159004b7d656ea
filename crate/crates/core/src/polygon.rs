//! Valued polygons and mass-conserving rasterization.
//!
//! Each polygon carries a value that is spread over the grid in proportion
//! to planar overlap area: a cell receives `value * overlap(cell) / area`.
//! Overlap is computed in a local equirectangular plane anchored at the
//! grid's mid-latitude; at sub-degree cell sizes the projection error is
//! negligible next to the source polygons themselves.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::PlanarProj;
use crate::grid::{DensityGrid, GridSpec};

/// A polygon (exterior ring plus optional holes) with an attached value.
///
/// Rings are open vertex lists of `(lat, lon)` degrees; the closing vertex
/// is implicit. Holes must lie inside the exterior ring.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuedPolygon {
    pub exterior: Vec<(f64, f64)>,
    pub holes: Vec<Vec<(f64, f64)>>,
    pub value: f64,
}

/// Signed shoelace area of an open ring of `(x, y)` points.
pub fn shoelace(ring: &[(f64, f64)]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (x1, y1) = ring[i];
        let (x2, y2) = ring[(i + 1) % n];
        acc += x1 * y2 - x2 * y1;
    }
    acc / 2.0
}

/// Clip an open ring against the axis-aligned rectangle
/// `[x0, x1] x [y0, y1]` (Sutherland-Hodgman). Returns an open ring that
/// may be empty.
pub fn clip_to_rect(ring: &[(f64, f64)], x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<(f64, f64)> {
    // inside tests for the four half-planes, in clip order
    let tests: [&dyn Fn(f64, f64) -> bool; 4] = [
        &|x, _| x >= x0,
        &|x, _| x <= x1,
        &|_, y| y >= y0,
        &|_, y| y <= y1,
    ];
    let mut current = ring.to_vec();
    for (side, inside) in tests.iter().enumerate() {
        if current.is_empty() {
            return current;
        }
        let mut next = Vec::with_capacity(current.len() + 4);
        for i in 0..current.len() {
            let (px, py) = current[i];
            let (cx, cy) = current[(i + 1) % current.len()];
            let p_in = inside(px, py);
            let c_in = inside(cx, cy);
            if p_in != c_in {
                next.push(edge_intersection(side, x0, x1, y0, y1, (px, py), (cx, cy)));
            }
            if c_in {
                next.push((cx, cy));
            }
        }
        current = next;
    }
    current
}

fn edge_intersection(
    side: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    (px, py): (f64, f64),
    (cx, cy): (f64, f64),
) -> (f64, f64) {
    match side {
        0 => intersect_vertical(x0, (px, py), (cx, cy)),
        1 => intersect_vertical(x1, (px, py), (cx, cy)),
        2 => intersect_horizontal(y0, (px, py), (cx, cy)),
        _ => intersect_horizontal(y1, (px, py), (cx, cy)),
    }
}

fn intersect_vertical(x: f64, (px, py): (f64, f64), (cx, cy): (f64, f64)) -> (f64, f64) {
    let t = (x - px) / (cx - px);
    (x, py + t * (cy - py))
}

fn intersect_horizontal(y: f64, (px, py): (f64, f64), (cx, cy): (f64, f64)) -> (f64, f64) {
    let t = (y - py) / (cy - py);
    (px + t * (cx - px), y)
}

/// Even-odd containment test over all rings of a polygon, so a point in a
/// hole counts as outside.
pub fn polygon_contains(poly: &ValuedPolygon, lat: f64, lon: f64) -> bool {
    let mut inside = ring_contains(&poly.exterior, lat, lon);
    for hole in &poly.holes {
        inside ^= ring_contains(hole, lat, lon);
    }
    inside
}

fn ring_contains(ring: &[(f64, f64)], lat: f64, lon: f64) -> bool {
    // Standard even-odd ray cast eastward in (lon, lat) coordinates.
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let (lat1, lon1) = ring[i];
        let (lat2, lon2) = ring[(i + 1) % n];
        if (lat1 > lat) != (lat2 > lat) {
            let x = lon1 + (lat - lat1) / (lat2 - lat1) * (lon2 - lon1);
            if lon < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Positive planar area of a polygon (exterior minus holes) under `proj`.
fn projected_area(poly: &ValuedPolygon, proj: &PlanarProj) -> f64 {
    let project = |ring: &[(f64, f64)]| -> Vec<(f64, f64)> {
        ring.iter().map(|&(lat, lon)| proj.forward(lat, lon)).collect()
    };
    let mut area = shoelace(&project(&poly.exterior)).abs();
    for hole in &poly.holes {
        area -= shoelace(&project(hole)).abs();
    }
    area
}

/// Rasterize valued polygons onto a grid with mass conservation.
///
/// Each cell receives `sum_i value_i * overlap_area(poly_i, cell) / area_i`.
/// Polygons wholly outside the extent contribute nothing; polygons partly
/// outside contribute only their inside portion. Contributions are computed
/// per polygon in parallel and folded in input order, so the result does
/// not depend on the worker count.
pub fn rasterize_polygons(polygons: &[ValuedPolygon], spec: &GridSpec) -> Result<DensityGrid> {
    let proj = PlanarProj::new(spec.mid_lat(), spec.mid_lon());

    for (index, poly) in polygons.iter().enumerate() {
        if poly.exterior.len() < 3 || projected_area(poly, &proj) <= 0.0 {
            return Err(Error::DegeneratePolygon { index });
        }
        if !(poly.value >= 0.0) {
            return Err(Error::MalformedFeature {
                index,
                reason: format!("value must be nonnegative, got {}", poly.value),
            });
        }
    }

    // Cell rectangles are axis-aligned under the (affine) projection.
    let (gx0, gy0) = proj.forward(spec.lat_min, spec.lon_min);
    let (gx1, gy1) = proj.forward(spec.lat_max(), spec.lon_max());
    let dx = (gx1 - gx0) / spec.n_cols as f64;
    let dy = (gy1 - gy0) / spec.n_rows as f64;

    let per_polygon: Vec<Vec<(usize, f64)>> = polygons
        .par_iter()
        .map(|poly| {
            let exterior: Vec<(f64, f64)> =
                poly.exterior.iter().map(|&(la, lo)| proj.forward(la, lo)).collect();
            let holes: Vec<Vec<(f64, f64)>> = poly
                .holes
                .iter()
                .map(|h| h.iter().map(|&(la, lo)| proj.forward(la, lo)).collect())
                .collect();

            let mut area = shoelace(&exterior).abs();
            for h in &holes {
                area -= shoelace(h).abs();
            }

            let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(x, y) in &exterior {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
            let c_lo = (((xmin - gx0) / dx).floor().max(0.0)) as usize;
            let r_lo = (((ymin - gy0) / dy).floor().max(0.0)) as usize;
            let c_hi = (((xmax - gx0) / dx).ceil() as isize).min(spec.n_cols as isize) as usize;
            let r_hi = (((ymax - gy0) / dy).ceil() as isize).min(spec.n_rows as isize) as usize;

            let mut out = Vec::new();
            for row in r_lo..r_hi {
                let y0 = gy0 + row as f64 * dy;
                for col in c_lo..c_hi {
                    let x0 = gx0 + col as f64 * dx;
                    let mut overlap =
                        shoelace(&clip_to_rect(&exterior, x0, x0 + dx, y0, y0 + dy)).abs();
                    for h in &holes {
                        overlap -= shoelace(&clip_to_rect(h, x0, x0 + dx, y0, y0 + dy)).abs();
                    }
                    if overlap > 0.0 {
                        out.push((row * spec.n_cols + col, overlap / area * poly.value));
                    }
                }
            }
            out
        })
        .collect();

    let mut mass = vec![0.0; spec.n_cells()];
    for contributions in &per_polygon {
        for &(idx, m) in contributions {
            mass[idx] += m;
        }
    }
    DensityGrid::new(*spec, mass)
}

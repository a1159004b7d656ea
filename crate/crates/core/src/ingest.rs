//! File ingestion: GeoJSON polygon features and lat/lon point CSVs.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::geo::PlanarProj;
use crate::grid::{DensityGrid, GridSpec};
use crate::polygon::{shoelace, ValuedPolygon};

/// Load a GeoJSON FeatureCollection of Polygon or MultiPolygon features.
///
/// With `value_field` set, every feature must carry a nonnegative numeric
/// property of that name; without it every feature gets value 1, which
/// suits plain boundary files. MultiPolygons are split into their parts
/// with the value apportioned by planar part area.
pub fn load_geojson(path: &Path, value_field: Option<&str>) -> Result<Vec<ValuedPolygon>> {
    let display = path.display().to_string();
    let root: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;

    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::BadFile {
            path: display,
            reason: "expected a GeoJSON FeatureCollection".into(),
        });
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::BadFile {
            path: display.clone(),
            reason: "FeatureCollection has no features array".into(),
        })?;

    let mut out = Vec::new();
    for (index, feature) in features.iter().enumerate() {
        let malformed = |reason: String| Error::MalformedFeature { index, reason };

        let value = match value_field {
            None => 1.0,
            Some(field) => feature
                .get("properties")
                .and_then(|p| p.get(field))
                .ok_or_else(|| malformed(format!("missing property {field:?}")))?
                .as_f64()
                .ok_or_else(|| malformed(format!("property {field:?} is not numeric")))?,
        };
        if !value.is_finite() || value < 0.0 {
            return Err(malformed(format!(
                "feature value must be finite and nonnegative, got {value}"
            )));
        }

        let geometry = feature
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| malformed("feature has no geometry".into()))?;
        let gtype = geometry.get("type").and_then(Value::as_str).unwrap_or("");
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| malformed("geometry has no coordinates".into()))?;

        match gtype {
            "Polygon" => {
                out.push(parse_polygon(coords, value).map_err(|r| malformed(r))?);
            }
            "MultiPolygon" => {
                let parts = coords
                    .as_array()
                    .ok_or_else(|| malformed("MultiPolygon coordinates must be an array".into()))?;
                let mut polys = Vec::with_capacity(parts.len());
                for part in parts {
                    polys.push(parse_polygon(part, 0.0).map_err(|r| malformed(r))?);
                }
                let areas: Vec<f64> = polys.iter().map(part_area).collect();
                let total: f64 = areas.iter().sum();
                if total <= 0.0 {
                    return Err(Error::DegeneratePolygon { index });
                }
                for (mut poly, area) in polys.into_iter().zip(areas) {
                    poly.value = value * area / total;
                    out.push(poly);
                }
            }
            other => {
                return Err(malformed(format!("unsupported geometry type {other:?}")));
            }
        }
    }
    Ok(out)
}

/// Planar area of one polygon in km^2, projected about its own centroid.
fn part_area(poly: &ValuedPolygon) -> f64 {
    let n = poly.exterior.len() as f64;
    let (lat0, lon0) = poly
        .exterior
        .iter()
        .fold((0.0, 0.0), |(a, b), &(la, lo)| (a + la / n, b + lo / n));
    let proj = PlanarProj::new(lat0, lon0);
    let project = |ring: &[(f64, f64)]| -> Vec<(f64, f64)> {
        ring.iter().map(|&(la, lo)| proj.forward(la, lo)).collect()
    };
    let mut area = shoelace(&project(&poly.exterior)).abs();
    for hole in &poly.holes {
        area -= shoelace(&project(hole)).abs();
    }
    area
}

/// Parse GeoJSON Polygon coordinates: an array of rings, the first
/// exterior, the rest holes. Positions are `[lon, lat, ...]`.
fn parse_polygon(coords: &Value, value: f64) -> std::result::Result<ValuedPolygon, String> {
    let rings = coords
        .as_array()
        .ok_or("Polygon coordinates must be an array of rings")?;
    if rings.is_empty() {
        return Err("Polygon has no rings".into());
    }
    let mut parsed = Vec::with_capacity(rings.len());
    for ring in rings {
        parsed.push(parse_ring(ring)?);
    }
    let exterior = parsed.remove(0);
    Ok(ValuedPolygon { exterior, holes: parsed, value })
}

fn parse_ring(ring: &Value) -> std::result::Result<Vec<(f64, f64)>, String> {
    let positions = ring.as_array().ok_or("ring must be an array of positions")?;
    let mut out = Vec::with_capacity(positions.len());
    for pos in positions {
        let nums = pos.as_array().ok_or("position must be an array")?;
        if nums.len() < 2 {
            return Err("position needs longitude and latitude".into());
        }
        let lon = nums[0].as_f64().ok_or("longitude is not numeric")?;
        let lat = nums[1].as_f64().ok_or("latitude is not numeric")?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(format!("latitude {lat} outside [-90, 90]"));
        }
        out.push((lat, lon));
    }
    if out.len() >= 2 && out.first() == out.last() {
        out.pop();
    }
    if out.len() < 3 {
        return Err("ring has fewer than 3 distinct vertices".into());
    }
    Ok(out)
}

/// Load `(lat, lon, weight)` points from a CSV with header `lat,lon,weight`.
/// The weight column is optional and defaults to 1.
pub fn load_points_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let display = path.display().to_string();
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));

    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let lat_idx = find("lat").ok_or_else(|| Error::BadFile {
        path: display.clone(),
        reason: "missing lat column".into(),
    })?;
    let lon_idx = find("lon").ok_or_else(|| Error::BadFile {
        path: display.clone(),
        reason: "missing lon column".into(),
    })?;
    let weight_idx = find("weight");

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |idx: usize, name: &str| -> Result<f64> {
            record
                .get(idx)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    row,
                    reason: format!("{name} is not a finite number"),
                })
        };
        let lat = field(lat_idx, "lat")?;
        let lon = field(lon_idx, "lon")?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::MalformedRow {
                row,
                reason: format!("latitude {lat} outside [-90, 90]"),
            });
        }
        let weight = match weight_idx {
            Some(idx) => field(idx, "weight")?,
            None => 1.0,
        };
        if weight < 0.0 {
            return Err(Error::MalformedRow {
                row,
                reason: format!("weight must be nonnegative, got {weight}"),
            });
        }
        out.push((lat, lon, weight));
    }
    Ok(out)
}

/// Accumulate point weights into grid cells.
///
/// Returns the grid and the number of points that fell outside the extent
/// (their weight is dropped but the count is surfaced to the caller).
pub fn rasterize_points(
    points: &[(f64, f64, f64)],
    spec: &GridSpec,
) -> Result<(DensityGrid, usize)> {
    let mut mass = vec![0.0; spec.n_cells()];
    let mut outside = 0usize;
    for &(lat, lon, weight) in points {
        match spec.cell_of(lat, lon) {
            Some((row, col)) => mass[spec.index(row, col)] += weight,
            None => outside += 1,
        }
    }
    Ok((DensityGrid::new(*spec, mass)?, outside))
}

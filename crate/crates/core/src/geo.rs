//! Spherical-earth geometry primitives.
//!
//! All distances are kilometres on a sphere of radius [`EARTH_RADIUS_KM`]
//! (the IUGG mean earth radius). Every distance computed anywhere in this
//! crate goes through [`haversine_km`] so that solver and test code agree
//! bit for bit.

/// Mean earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle distance between two points given as (lat, lon) in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();

    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Area in km^2 of the spherical rectangle `[lat_bottom, lat_top] x [height in lon degrees]`.
///
/// Exact on the sphere: `R^2 * dlon_rad * (sin(lat_top) - sin(lat_bottom))`.
pub fn cell_area_km2(lat_bottom: f64, lat_top: f64, dlon_deg: f64) -> f64 {
    let dlon_rad = dlon_deg.to_radians();
    EARTH_RADIUS_KM * EARTH_RADIUS_KM
        * dlon_rad
        * (lat_top.to_radians().sin() - lat_bottom.to_radians().sin())
}

/// Equirectangular projection about a reference latitude.
///
/// Maps (lat, lon) degrees to planar kilometres with east = +x, north = +y.
/// Distances are exact along meridians and along the reference parallel;
/// elsewhere the error is second order in the extent. Used only for
/// polygon clipping and area weights inside a single grid cell, never for
/// circle radii.
#[derive(Debug, Clone, Copy)]
pub struct PlanarProj {
    lat0: f64,
    lon0: f64,
    kx: f64,
    ky: f64,
}

impl PlanarProj {
    pub fn new(lat0: f64, lon0: f64) -> Self {
        let km_per_deg = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        Self {
            lat0,
            lon0,
            kx: km_per_deg * lat0.to_radians().cos(),
            ky: km_per_deg,
        }
    }

    /// Project (lat, lon) in degrees to (x, y) in km.
    pub fn forward(&self, lat: f64, lon: f64) -> (f64, f64) {
        ((lon - self.lon0) * self.kx, (lat - self.lat0) * self.ky)
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        (self.lat0 + y / self.ky, self.lon0 + x / self.kx)
    }
}

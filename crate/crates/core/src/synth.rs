//! Synthetic grids with known ground truth, plus exhaustive reference
//! implementations used to cross-check the fast solvers.
//!
//! The ring-city generator supports two coefficient rules. The default
//! makes the enclosed mass a pure power of radius inside each ring, so
//! the radius-fraction profile is exactly piecewise linear in log-log
//! space and a fit can recover the generator parameters; the price is a
//! density step at each ring boundary. The alternative makes the density
//! continuous across rings (the same construction the ring-model
//! constructor uses), which looks smoother but blurs the profile's
//! breakpoints, because the cumulative mass then has an additive offset
//! that bends each ring's log-log trace away from a straight line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{trace_exterior, BoundarySet, Cluster, Connectivity};
use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::grid::{DensityGrid, GridSpec};
use crate::ringmodel::RingModel;
use crate::vp::{SearchConstraint, VpCircle};

/// Cell-count guard for the exhaustive searches.
const ORACLE_CELL_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientRule {
    /// Pure-power enclosed mass per ring: log r is piecewise linear in
    /// log f, density jumps at ring boundaries.
    #[default]
    ProfileExact,
    /// Continuous density across ring boundaries, mirroring the
    /// ring-model constructor.
    DensityContinuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingCitySpec {
    pub center: (f64, f64),
    /// (outer_radius_km, exponent) per ring, radii strictly increasing.
    pub rings: Vec<(f64, f64)>,
    pub total_mass: f64,
    pub grid: GridSpec,
    /// Multiplicative lognormal noise level; 0 disables noise.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub coefficient_rule: CoefficientRule,
}

impl RingCitySpec {
    fn validate(&self) -> Result<()> {
        if self.rings.is_empty() {
            return Err(Error::InvalidSynthSpec("at least one ring required".into()));
        }
        let mut prev = 0.0;
        for &(r, a) in &self.rings {
            if !(r > prev && r.is_finite()) {
                return Err(Error::InvalidSynthSpec(format!(
                    "ring radii must be strictly increasing and positive, got {r} after {prev}"
                )));
            }
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidSynthSpec(format!(
                    "ring exponents must be positive, got {a}"
                )));
            }
            prev = r;
        }
        if !(self.total_mass > 0.0 && self.total_mass.is_finite()) {
            return Err(Error::InvalidSynthSpec(format!(
                "total mass must be positive, got {}",
                self.total_mass
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidSynthSpec(format!(
                "noise sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Distance from the centre to the nearest grid edge, measured along
    /// the perpendiculars; the outer ring must fit inside.
    fn edge_clearance_km(&self) -> f64 {
        let (lat, lon) = self.center;
        let g = &self.grid;
        [
            haversine_km(lat, lon, g.lat_min, lon),
            haversine_km(lat, lon, g.lat_max(), lon),
            haversine_km(lat, lon, lat, g.lon_min),
            haversine_km(lat, lon, lat, g.lon_max()),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    /// Per-ring density coefficients under the chosen rule, as
    /// (r_inner, r_outer, a, c) with density c * r^(a-2).
    fn coefficients(&self) -> Result<Vec<(f64, f64, f64, f64)>> {
        let radii: Vec<f64> = self.rings.iter().map(|r| r.0).collect();
        let exps: Vec<f64> = self.rings.iter().map(|r| r.1).collect();
        match self.coefficient_rule {
            CoefficientRule::DensityContinuous => {
                let model = RingModel::from_rings(&radii, &exps, self.total_mass)?;
                Ok(model
                    .rings
                    .iter()
                    .map(|r| (r.r_inner_km, r.r_outer_km, r.a, r.c))
                    .collect())
            }
            CoefficientRule::ProfileExact => {
                // Enclosed mass m_j at each outer edge, recursed inward
                // from m_n = P via m_{j-1} = m_j (R_{j-1}/R_j)^{a_j};
                // then density = a_j m_j r^{a_j-2} / (2 pi R_j^{a_j}).
                let n = radii.len();
                let mut edge_mass = vec![0.0; n];
                edge_mass[n - 1] = self.total_mass;
                for j in (1..n).rev() {
                    edge_mass[j - 1] = edge_mass[j] * (radii[j - 1] / radii[j]).powf(exps[j]);
                }
                let mut out = Vec::with_capacity(n);
                let mut r_in = 0.0;
                for j in 0..n {
                    let c = exps[j] * edge_mass[j]
                        / (std::f64::consts::TAU * radii[j].powf(exps[j]));
                    if !(c > 0.0 && c.is_finite()) {
                        return Err(Error::InvalidSynthSpec(format!(
                            "ring {j} coefficient degenerate ({c})"
                        )));
                    }
                    out.push((r_in, radii[j], exps[j], c));
                    r_in = radii[j];
                }
                Ok(out)
            }
        }
    }
}

/// Rasterize a ring city: density evaluated at each cell centre times
/// the cell area, optional seeded lognormal noise, total renormalized to
/// the requested mass.
pub fn generate_ring_city(spec: &RingCitySpec, seed: u64) -> Result<DensityGrid> {
    spec.validate()?;
    let outer = spec.rings.last().unwrap().0;
    if spec.edge_clearance_km() < outer {
        return Err(Error::OuterRingExceedsGrid { radius_km: outer });
    }
    let coeffs = spec.coefficients()?;
    let g = spec.grid;
    // Density diverges at r = 0 for exponents below 2; clamp the centre
    // cell to a quarter cell so discretization stays bounded.
    let r_floor = g.cell_size * (crate::geo::EARTH_RADIUS_KM * std::f64::consts::PI / 180.0) / 4.0;

    let mut mass = vec![0.0; g.n_cells()];
    for row in 0..g.n_rows {
        let area = g.cell_area_km2(row);
        for col in 0..g.n_cols {
            let (lat, lon) = g.cell_center(row, col);
            let d = haversine_km(spec.center.0, spec.center.1, lat, lon).max(r_floor);
            if d > outer {
                continue;
            }
            let &(_, _, a, c) = coeffs
                .iter()
                .find(|&&(_, r_out, _, _)| d <= r_out)
                .expect("distance bounded by the outer ring");
            mass[g.index(row, col)] = c * d.powf(a - 2.0) * area;
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in mass.iter_mut().filter(|m| **m > 0.0) {
            let u: f64 = 1.0 - rng.random::<f64>();
            let v: f64 = rng.random::<f64>();
            let z = (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
            *m *= (spec.noise_sigma * z).exp();
        }
    }

    let sum: f64 = mass.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidSynthSpec(
            "generated city has no mass on the grid; check radii against the cell size".into(),
        ));
    }
    let scale = spec.total_mass / sum;
    for m in &mut mass {
        *m *= scale;
    }
    DensityGrid::new(g, mass)
}

/// A uniform-density disc for plain-plus-discs scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscSpec {
    pub center: (f64, f64),
    pub radius_km: f64,
    /// Mass per km² inside the disc.
    pub density: f64,
}

/// Constant-density plain with discs stamped on top; a cell takes the
/// density of the first disc containing its centre.
pub fn generate_plain_with_discs(
    grid: GridSpec,
    plain_density: f64,
    discs: &[DiscSpec],
) -> Result<DensityGrid> {
    if !(plain_density >= 0.0 && plain_density.is_finite()) {
        return Err(Error::InvalidSynthSpec(format!(
            "plain density must be nonnegative, got {plain_density}"
        )));
    }
    for (i, d) in discs.iter().enumerate() {
        if !(d.radius_km > 0.0 && d.density >= 0.0 && d.density.is_finite()) {
            return Err(Error::InvalidSynthSpec(format!(
                "disc {i} needs a positive radius and nonnegative density"
            )));
        }
    }
    let mut mass = vec![0.0; grid.n_cells()];
    for row in 0..grid.n_rows {
        let area = grid.cell_area_km2(row);
        for col in 0..grid.n_cols {
            let (lat, lon) = grid.cell_center(row, col);
            let density = discs
                .iter()
                .find(|d| haversine_km(d.center.0, d.center.1, lat, lon) <= d.radius_km)
                .map_or(plain_density, |d| d.density);
            mass[grid.index(row, col)] = density * area;
        }
    }
    DensityGrid::new(grid, mass)
}

/// Exhaustive smallest-circle search: every admissible centre evaluated
/// with a full canonical sort. Shares only the ordering contract with the
/// fast solver, not code.
pub fn brute_force_vp_circle(
    grid: &DensityGrid,
    f: f64,
    constraint: &SearchConstraint,
) -> Result<VpCircle> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::BadFractions);
    }
    let spec = grid.spec();
    let cells: Vec<(usize, usize, f64, f64, f64)> = grid
        .nonzero_cells()
        .map(|(r, c, m)| {
            let (lat, lon) = spec.cell_center(r, c);
            (r, c, lat, lon, m)
        })
        .collect();
    if cells.len() > ORACLE_CELL_LIMIT {
        return Err(Error::TooManyCellsForOracle {
            limit: ORACLE_CELL_LIMIT,
            actual: cells.len(),
        });
    }
    let total = grid.total_mass();
    if total <= 0.0 {
        return Err(Error::EmptyGrid);
    }
    let target = f * total;

    let mut best: Option<(f64, f64, usize, usize, usize)> = None;
    for &(cr, cc, clat, clon, cm) in &cells {
        if cm < constraint.min_candidate_mass {
            continue;
        }
        if let Some(region) = &constraint.candidate_region {
            if haversine_km(region.center_lat, region.center_lon, clat, clon)
                > region.max_distance_km
            {
                continue;
            }
        }
        let mut ranked: Vec<(f64, usize, usize, f64)> = cells
            .iter()
            .map(|&(r, c, lat, lon, m)| (haversine_km(clat, clon, lat, lon), r, c, m))
            .collect();
        ranked.sort_by(|a, b| {
            (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap()
        });
        let mut acc = 0.0;
        let mut cut = ranked.len() - 1;
        let mut reached = false;
        for (i, item) in ranked.iter().enumerate() {
            acc += item.3;
            if acc >= target {
                cut = i;
                reached = true;
                break;
            }
        }
        if !reached {
            // Rounding can leave the full sum a few ulps under f*total;
            // the full set is then the answer.
            cut = ranked.len() - 1;
        }
        let radius = ranked[cut].0;
        let mut achieved: f64 = ranked[..=cut].iter().map(|x| x.3).sum();
        let mut k = cut;
        while k + 1 < ranked.len() && ranked[k + 1].0 == radius {
            k += 1;
            achieved += ranked[k].3;
        }
        let entry = (radius, achieved, cr, cc, k + 1);
        let better = match &best {
            None => true,
            Some(b) => {
                (entry.0, -entry.1, entry.2, entry.3) < (b.0, -b.1, b.2, b.3)
            }
        };
        if better {
            best = Some(entry);
        }
    }
    let (radius, achieved, row, col, count) = best.ok_or(Error::NoCandidates)?;
    Ok(VpCircle {
        target_fraction: f,
        radius_km: radius,
        center_lat: spec.lat_center(row),
        center_lon: spec.lon_center(col),
        achieved_fraction: achieved / total,
        cells_included: count,
    })
}

/// Naive clustering oracle: repeated flood fill for components, with
/// enclosed pockets found by an outside-in background fill.
pub fn brute_force_clusters(
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
    if rows * cols > ORACLE_CELL_LIMIT {
        return Err(Error::TooManyCellsForOracle {
            limit: ORACLE_CELL_LIMIT,
            actual: rows * cols,
        });
    }
    let above =
        |r: usize, c: usize| grid.mass(r, c) / spec.cell_area_km2(r) > rho0;

    // Outside-in fill: everything below threshold that touches the frame
    // transitively (4-connected) is true background; the rest is holes.
    let mut background = vec![vec![false; cols]; rows];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if (r == 0 || r == rows - 1 || c == 0 || c == cols - 1) && !above(r, c) {
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        if background[r][c] || above(r, c) {
            continue;
        }
        background[r][c] = true;
        if r > 0 {
            stack.push((r - 1, c));
        }
        if r + 1 < rows {
            stack.push((r + 1, c));
        }
        if c > 0 {
            stack.push((r, c - 1));
        }
        if c + 1 < cols {
            stack.push((r, c + 1));
        }
    }
    let in_cluster = |r: usize, c: usize| above(r, c) || !background[r][c];

    let neighbours = |r: usize, c: usize| {
        let mut out: Vec<(usize, usize)> = Vec::with_capacity(8);
        let eight = connectivity == Connectivity::Eight;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                if !eight && dr != 0 && dc != 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nr < rows as i64 && nc >= 0 && nc < cols as i64 {
                    out.push((nr as usize, nc as usize));
                }
            }
        }
        out
    };

    let mut visited = vec![vec![false; cols]; rows];
    let mut drafts: Vec<(Vec<(usize, usize)>, f64, f64, bool)> = Vec::new();
    for r0 in 0..rows {
        for c0 in 0..cols {
            if visited[r0][c0] || !in_cluster(r0, c0) {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![(r0, c0)];
            visited[r0][c0] = true;
            while let Some((r, c)) = stack.pop() {
                comp.push((r, c));
                for (nr, nc) in neighbours(r, c) {
                    if !visited[nr][nc] && in_cluster(nr, nc) {
                        visited[nr][nc] = true;
                        stack.push((nr, nc));
                    }
                }
            }
            comp.sort_unstable();
            let mass: f64 = comp.iter().map(|&(r, c)| grid.mass(r, c)).sum();
            let area: f64 = comp.iter().map(|&(r, _)| spec.cell_area_km2(r)).sum();
            let holes = comp.iter().any(|&(r, c)| !above(r, c));
            drafts.push((comp, mass, area, holes));
        }
    }
    drafts.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0[0].cmp(&b.0[0])));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::cluster_above;
    use crate::piecewise::{fit_piecewise, mask_artifacts};
    use crate::ringmodel::model_from_fit;
    use crate::vp::{default_fractions, vp_circle, vp_profile};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn centred_grid(cells: usize, cell_size: f64) -> GridSpec {
        let half = cells as f64 * cell_size / 2.0;
        GridSpec::new(-half, -half, cell_size, cells, cells).unwrap()
    }

    fn two_ring_spec(rule: CoefficientRule, sigma: f64) -> RingCitySpec {
        RingCitySpec {
            center: (0.0, 0.0),
            rings: vec![(10.0, 2.0), (30.0, 0.5)],
            total_mass: 1.0e6,
            grid: centred_grid(64, 0.01),
            noise_sigma: sigma,
            coefficient_rule: rule,
        }
    }

    #[test]
    fn single_ring_disc_is_uniform() {
        let spec = RingCitySpec {
            center: (0.0, 0.0),
            rings: vec![(10.0, 2.0)],
            total_mass: 5.0e5,
            grid: centred_grid(24, 0.01),
            noise_sigma: 0.0,
            coefficient_rule: CoefficientRule::ProfileExact,
        };
        let g = generate_ring_city(&spec, 0).unwrap();
        assert_relative_eq!(g.total_mass(), 5.0e5, max_relative = 1e-12);
        let gs = g.spec();
        let mut densities = Vec::new();
        for (r, c, m) in g.nonzero_cells() {
            let p = gs.cell_center(r, c);
            let d = haversine_km(0.0, 0.0, p.0, p.1);
            if d < 9.0 {
                densities.push(m / gs.cell_area_km2(r));
            }
        }
        assert!(densities.len() > 100);
        let first = densities[0];
        for d in densities {
            assert_relative_eq!(d, first, max_relative = 1e-9);
        }
    }

    #[test]
    fn both_rules_match_their_own_closed_form_inside_ring_one() {
        for rule in [CoefficientRule::ProfileExact, CoefficientRule::DensityContinuous] {
            let mut spec = two_ring_spec(rule, 0.0);
            spec.grid = centred_grid(128, 0.005);
            let g = generate_ring_city(&spec, 0).unwrap();
            let gs = g.spec();
            let inner: f64 = g
                .nonzero_cells()
                .filter(|&(r, c, _)| {
                    let p = gs.cell_center(r, c);
                    haversine_km(0.0, 0.0, p.0, p.1) <= 10.0
                })
                .map(|(_, _, m)| m)
                .sum();
            let coeffs = spec.coefficients().unwrap();
            let (_, _, a1, c1) = coeffs[0];
            let expect = std::f64::consts::TAU * c1 / a1 * 10.0f64.powf(a1);
            assert_relative_eq!(inner, expect, max_relative = 5e-3);
        }
    }

    #[test]
    fn noiseless_generation_ignores_the_seed() {
        let spec = two_ring_spec(CoefficientRule::ProfileExact, 0.0);
        let a = generate_ring_city(&spec, 1).unwrap();
        let b = generate_ring_city(&spec, 2).unwrap();
        assert_eq!(a.masses(), b.masses());
    }

    #[test]
    fn noisy_generation_is_seed_deterministic_but_seed_sensitive() {
        let spec = two_ring_spec(CoefficientRule::ProfileExact, 0.05);
        let a = generate_ring_city(&spec, 7).unwrap();
        let b = generate_ring_city(&spec, 7).unwrap();
        let c = generate_ring_city(&spec, 8).unwrap();
        assert_eq!(a.masses(), b.masses());
        assert_ne!(a.masses(), c.masses());
        assert_relative_eq!(a.total_mass(), spec.total_mass, max_relative = 1e-12);
    }

    #[test]
    fn oversized_city_is_rejected() {
        let mut spec = two_ring_spec(CoefficientRule::ProfileExact, 0.0);
        spec.grid = centred_grid(40, 0.01);
        match generate_ring_city(&spec, 0) {
            Err(Error::OuterRingExceedsGrid { radius_km }) => {
                assert_eq!(radius_km, 30.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generator_roundtrip_recovers_rings() {
        let spec = two_ring_spec(CoefficientRule::ProfileExact, 0.0);
        let g = generate_ring_city(&spec, 0).unwrap();
        let fractions = default_fractions(&g).unwrap();
        let constraint = SearchConstraint::within_km(0.0, 0.0, 3.0);
        let profile = vp_profile(&g, &fractions, &constraint).unwrap();
        let masked = mask_artifacts(&profile, 20).unwrap();
        let fit = fit_piecewise(&masked, 1, None).unwrap();
        let model = model_from_fit(&fit, &profile).unwrap();
        let cell_km = 0.01 * 111.2;
        assert!(
            (model.rings[0].r_outer_km - 10.0).abs() < cell_km,
            "breakpoint radius {} vs 10",
            model.rings[0].r_outer_km
        );
        assert!(
            (model.outer_radius_km - 30.0).abs() < cell_km,
            "outer radius {} vs 30",
            model.outer_radius_km
        );
        assert!((model.rings[0].a - 2.0).abs() / 2.0 < 0.02, "a1 = {}", model.rings[0].a);
        assert!((model.rings[1].a - 0.5).abs() / 0.5 < 0.02, "a2 = {}", model.rings[1].a);
    }

    #[test]
    fn plain_with_discs_stamps_first_match() {
        let grid = centred_grid(30, 0.01);
        let discs = [
            DiscSpec { center: (0.0, 0.0), radius_km: 5.0, density: 900.0 },
            DiscSpec { center: (0.0, 0.0), radius_km: 8.0, density: 300.0 },
        ];
        let g = generate_plain_with_discs(grid, 10.0, &discs).unwrap();
        let gs = g.spec();
        let centre_cell = gs.cell_of(0.0, 0.0).unwrap();
        let d_centre = g.density(centre_cell.0, centre_cell.1);
        assert_relative_eq!(d_centre, 900.0, max_relative = 1e-9);
        // A point in the annulus of the second disc.
        let (r, c) = gs.cell_of(0.0, 0.06).unwrap();
        assert_relative_eq!(g.density(r, c), 300.0, max_relative = 1e-9);
        let corner = g.density(0, 0);
        assert_relative_eq!(corner, 10.0, max_relative = 1e-9);
        assert!(generate_plain_with_discs(grid, -1.0, &discs).is_err());
    }

    fn random_grid(rng: &mut StdRng, rows: usize, cols: usize) -> DensityGrid {
        let spec = GridSpec::new(
            rng.random_range(-60.0..60.0),
            rng.random_range(-90.0..90.0),
            0.03,
            rows,
            cols,
        )
        .unwrap();
        let mass: Vec<f64> = (0..rows * cols)
            .map(|_| {
                if rng.random_bool(0.6) {
                    rng.random_range(0.1..50.0f64)
                } else {
                    0.0
                }
            })
            .collect();
        DensityGrid::new(spec, mass).unwrap()
    }

    #[test]
    fn exhaustive_and_fast_circle_searches_agree_exactly() {
        let mut rng = StdRng::seed_from_u64(1234);
        for _ in 0..25 {
            let g = random_grid(&mut rng, 12, 12);
            if g.total_mass() == 0.0 {
                continue;
            }
            for f in [0.1, 0.5, 1.0] {
                let fast = vp_circle(&g, f, &SearchConstraint::default()).unwrap();
                let slow = brute_force_vp_circle(&g, f, &SearchConstraint::default()).unwrap();
                assert_eq!(fast, slow);
            }
        }
    }

    /// Second, independently structured exhaustive search: no prefix
    /// array, no partition; a plain accumulation walk in the shared
    /// canonical order.
    fn exhaustive_walk(grid: &DensityGrid, f: f64) -> VpCircle {
        let spec = grid.spec();
        let total = grid.total_mass();
        let target = f * total;
        let cells: Vec<(usize, usize, f64)> = grid.nonzero_cells().collect();
        let mut best: Option<(f64, f64, usize, usize, usize)> = None;
        for &(cr, cc, _) in &cells {
            let (clat, clon) = spec.cell_center(cr, cc);
            let mut ranked: Vec<(f64, usize, usize, f64)> = cells
                .iter()
                .map(|&(r, c, m)| {
                    let (lat, lon) = spec.cell_center(r, c);
                    (haversine_km(clat, clon, lat, lon), r, c, m)
                })
                .collect();
            ranked.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
            let mut acc = 0.0;
            let mut idx = ranked.len() - 1;
            for (i, item) in ranked.iter().enumerate() {
                acc += item.3;
                if acc >= target {
                    idx = i;
                    break;
                }
            }
            let radius = ranked[idx].0;
            while idx + 1 < ranked.len() && ranked[idx + 1].0 == radius {
                idx += 1;
                acc += ranked[idx].3;
            }
            let cand = (radius, acc, cr, cc, idx + 1);
            if best.is_none_or(|b| (cand.0, -cand.1, cand.2, cand.3) < (b.0, -b.1, b.2, b.3)) {
                best = Some(cand);
            }
        }
        let (radius, achieved, row, col, count) = best.unwrap();
        VpCircle {
            target_fraction: f,
            radius_km: radius,
            center_lat: spec.lat_center(row),
            center_lon: spec.lon_center(col),
            achieved_fraction: achieved / total,
            cells_included: count,
        }
    }

    #[test]
    fn the_two_exhaustive_searches_agree() {
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..10 {
            let g = random_grid(&mut rng, 10, 10);
            if g.total_mass() == 0.0 {
                continue;
            }
            for f in [0.25, 0.8, 1.0] {
                let a = brute_force_vp_circle(&g, f, &SearchConstraint::default()).unwrap();
                let b = exhaustive_walk(&g, f);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn oracle_guards_against_huge_grids() {
        let spec = GridSpec::new(0.0, 0.0, 0.01, 80, 80).unwrap();
        let g = DensityGrid::new(spec, vec![1.0; 6400]).unwrap();
        assert!(matches!(
            brute_force_vp_circle(&g, 0.5, &SearchConstraint::default()),
            Err(Error::TooManyCellsForOracle { limit: 5000, actual: 6400 })
        ));
        assert!(matches!(
            brute_force_clusters(&g, 1.0, Connectivity::Four),
            Err(Error::TooManyCellsForOracle { .. })
        ));
    }

    #[test]
    fn point_mass_oracle_gives_zero_radius() {
        let spec = GridSpec::new(0.0, 0.0, 0.1, 5, 5).unwrap();
        let mut mass = vec![0.0; 25];
        mass[7] = 3.0;
        let g = DensityGrid::new(spec, mass).unwrap();
        let c = brute_force_vp_circle(&g, 0.7, &SearchConstraint::default()).unwrap();
        assert_eq!(c.radius_km, 0.0);
        assert_eq!(c.cells_included, 1);
    }

    #[test]
    fn uniform_three_by_three_tie_rule_in_oracle() {
        let spec = GridSpec::new(0.0, 0.0, 0.1, 3, 3).unwrap();
        let g = DensityGrid::new(spec, vec![1.0; 9]).unwrap();
        let c = brute_force_vp_circle(&g, 1.0 / 9.0, &SearchConstraint::default()).unwrap();
        assert_eq!(c.radius_km, 0.0);
        assert_eq!((c.center_lat, c.center_lon), (spec.lat_center(0), spec.lon_center(0)));
    }

    #[test]
    fn cluster_oracle_matches_fast_clustering() {
        let mut rng = StdRng::seed_from_u64(555);
        for trial in 0..20 {
            let g = random_grid(&mut rng, 14, 14);
            let rho = rng.random_range(10.0..40.0);
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let fast = cluster_above(&g, rho, conn).unwrap();
                let slow = brute_force_clusters(&g, rho, conn).unwrap();
                assert_eq!(fast, slow, "trial {trial} connectivity {conn:?}");
            }
        }
    }

    #[test]
    fn checkerboard_exercises_hole_filling_and_connectivity() {
        // Interior below-threshold cells of a checkerboard are sealed off
        // from the frame, so they fill in and fuse the interior into one
        // blob; only the two corners without filled neighbours stay
        // separate under 4-connectivity.
        let spec = GridSpec::new(0.0, 0.0, 0.05, 6, 6).unwrap();
        let mass: Vec<f64> = (0..36)
            .map(|i| {
                let (r, c) = (i / 6, i % 6);
                if (r + c) % 2 == 0 {
                    50.0
                } else {
                    0.0
                }
            })
            .collect();
        let g = DensityGrid::new(spec, mass).unwrap();
        let four = brute_force_clusters(&g, 1.0, Connectivity::Four).unwrap();
        assert_eq!(four.clusters.len(), 3);
        assert_eq!(four.clusters[0].cells.len(), 24);
        assert!(four.clusters[0].holes_filled);
        assert_eq!(four.clusters[1].cells, vec![(0, 0)]);
        assert_eq!(four.clusters[2].cells, vec![(5, 5)]);
        let eight = brute_force_clusters(&g, 1.0, Connectivity::Eight).unwrap();
        assert_eq!(eight.clusters.len(), 1);
        assert_eq!(eight.clusters[0].cells.len(), 26);
        assert_eq!(cluster_above(&g, 1.0, Connectivity::Four).unwrap(), four);
        assert_eq!(cluster_above(&g, 1.0, Connectivity::Eight).unwrap(), eight);
    }

    #[test]
    fn spec_validation_rejects_bad_rings() {
        let mut spec = two_ring_spec(CoefficientRule::ProfileExact, 0.0);
        spec.rings = vec![];
        assert!(generate_ring_city(&spec, 0).is_err());
        spec.rings = vec![(10.0, 2.0), (5.0, 1.0)];
        assert!(generate_ring_city(&spec, 0).is_err());
        spec.rings = vec![(10.0, -2.0)];
        assert!(generate_ring_city(&spec, 0).is_err());
        spec.rings = vec![(10.0, 2.0)];
        spec.total_mass = 0.0;
        assert!(generate_ring_city(&spec, 0).is_err());
    }
}

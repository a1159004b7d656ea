//! Release gate: one test per acceptance criterion, each printing a
//! one-line verdict. Run with `--nocapture` to see the lines; the
//! census-data criterion is ignored unless VPBOUNDS_CENSUS_DIR is set.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vpbounds::boundary::{
    city_boundary, cluster_above, fuzz_boundary, BoundarySet, CitySearch, Connectivity,
    PerturbationSpec,
};
use vpbounds::geo::haversine_km;
use vpbounds::grid::{DensityGrid, GridSpec};
use vpbounds::piecewise::{fit_piecewise, mask_artifacts, RingFit, DEFAULT_MASK_MIN_CELLS};
use vpbounds::ringmodel::{model_from_fit, threshold_density};
use vpbounds::synth::{
    brute_force_clusters, brute_force_vp_circle, generate_plain_with_discs, generate_ring_city,
    DiscSpec, RingCitySpec,
};
use vpbounds::vp::{vp_profile, SearchConstraint};

const ORACLE_FRACTIONS: [f64; 5] = [0.1, 0.25, 0.5, 0.9, 1.0];

/// Deterministic small random grid for the oracle comparisons.
fn random_grid(seed: u64) -> DensityGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rows = rng.random_range(4..=20);
    let n_cols = rng.random_range(4..=20);
    let lat_min = rng.random_range(-60.0..60.0);
    let lon_min = rng.random_range(-170.0..160.0);
    let cell_size = rng.random_range(0.01..0.1);
    let spec = GridSpec::new(lat_min, lon_min, cell_size, n_rows, n_cols).unwrap();
    let mut mass = vec![0.0; spec.n_cells()];
    for m in &mut mass {
        if rng.random::<f64>() < 0.6 {
            *m = rng.random::<f64>() * 10.0;
        }
    }
    let k = rng.random_range(0..mass.len());
    if mass.iter().all(|&m| m == 0.0) {
        mass[k] = 1.0;
    }
    DensityGrid::new(spec, mass).unwrap()
}

/// Two-ring test city on an equator-centred grid: steep core to 10 km,
/// shallow tail to 28 km.
fn two_ring_spec(cell_size: f64, n_rows: usize, n_cols: usize, noise_sigma: f64) -> RingCitySpec {
    let lat_min = -cell_size * n_rows as f64 / 2.0;
    let lon_min = -cell_size * n_cols as f64 / 2.0;
    RingCitySpec {
        center: (0.0, 0.0),
        rings: vec![(10.0, 2.0), (28.0, 0.5)],
        total_mass: 500_000.0,
        grid: GridSpec::new(lat_min, lon_min, cell_size, n_rows, n_cols).unwrap(),
        noise_sigma,
        coefficient_rule: Default::default(),
    }
}

fn near(lat_min: f64, lon_min: f64, cell: f64, rows: usize, cols: usize) -> GridSpec {
    GridSpec::new(lat_min, lon_min, cell, rows, cols).unwrap()
}

#[test]
fn criterion_01_circle_search_matches_the_exhaustive_oracle() {
    let start = Instant::now();
    let unconstrained = SearchConstraint::default();
    let mut checked = 0usize;
    for seed in 0..100 {
        let grid = random_grid(seed);
        for &f in &ORACLE_FRACTIONS {
            let fast = vpbounds::vp::vp_circle(&grid, f, &unconstrained).unwrap();
            let slow = brute_force_vp_circle(&grid, f, &unconstrained).unwrap();
            assert_eq!(fast, slow, "seed {seed}, f {f}");
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "oracle sweep took {secs:.1} s, limit 10 s");
    println!("criterion 1: PASS, {checked} circle searches matched the oracle in {secs:.2} s");
}

#[test]
fn criterion_02_profiles_have_nondecreasing_radii() {
    let unconstrained = SearchConstraint::default();
    let mut violations = 0usize;
    let mut profiles = 0usize;
    for seed in 0..100 {
        let grid = random_grid(seed);
        let profile = vp_profile(&grid, &ORACLE_FRACTIONS, &unconstrained).unwrap();
        violations += profile
            .entries
            .windows(2)
            .filter(|w| w[1].radius_km < w[0].radius_km)
            .count();
        profiles += 1;
    }
    assert_eq!(violations, 0, "radius decreased within a profile");
    println!("criterion 2: PASS, 0 monotonicity violations across {profiles} profiles");
}

#[test]
fn criterion_03_uniform_disc_recovers_its_analytic_form() {
    let start = Instant::now();
    let radius_km = 10.0;
    let density = 120.0;
    let spec = near(-0.13, -0.13, 0.0025, 104, 104);
    let disc = DiscSpec { center: (0.0, 0.0), radius_km, density };
    let grid = generate_plain_with_discs(spec, 0.0, &[disc]).unwrap();
    let total = grid.total_mass();

    let constraint = SearchConstraint::within_km(0.0, 0.0, 3.0);
    let fractions = vpbounds::vp::default_fractions(&grid).unwrap();
    let profile = vp_profile(&grid, &fractions, &constraint).unwrap();
    let masked = mask_artifacts(&profile, DEFAULT_MASK_MIN_CELLS).unwrap();
    let fit = fit_piecewise(&masked, 0, None).unwrap();
    let slope = fit.slopes[0];
    assert!((slope - 0.5).abs() <= 0.01, "slope {slope} outside 0.5 +/- 0.01");

    let model = model_from_fit(&fit, &profile).unwrap();
    let a = model.rings[0].a;
    let c = model.rings[0].c;
    let c_true = total / (std::f64::consts::PI * radius_km * radius_km);
    assert!((a - 2.0).abs() <= 0.05, "exponent {a} outside 2 +/- 0.05");
    assert!(
        (c - c_true).abs() <= 0.01 * c_true,
        "coefficient {c} more than 1% from {c_true}"
    );
    let rho0 = threshold_density(&model, 0).unwrap();
    let rho_true = c_true / 2.0;
    assert!(
        (rho0 - rho_true).abs() <= 0.01 * rho_true,
        "threshold {rho0} more than 1% from {rho_true}"
    );
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 5.0, "disc analysis took {secs:.1} s, limit 5 s");
    println!(
        "criterion 3: PASS, slope {slope:.4}, a {a:.4}, c {c:.2} vs {c_true:.2}, \
         threshold {rho0:.2} vs {rho_true:.2}, {secs:.2} s"
    );
}

fn fit_two_ring(grid: &DensityGrid) -> RingFit {
    let constraint = SearchConstraint::within_km(0.0, 0.0, 3.0);
    let fractions = vpbounds::vp::default_fractions(grid).unwrap();
    let profile = vp_profile(grid, &fractions, &constraint).unwrap();
    let masked = mask_artifacts(&profile, DEFAULT_MASK_MIN_CELLS).unwrap();
    fit_piecewise(&masked, 1, None).unwrap()
}

#[test]
fn criterion_04_two_ring_city_recovery_clean_and_noisy() {
    let start = Instant::now();
    let cell_km = 0.01 * vpbounds::geo::EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

    let clean = generate_ring_city(&two_ring_spec(0.01, 64, 96, 0.0), 0).unwrap();
    let fit = fit_two_ring(&clean);
    let (_, bp_radius) = fit.breakpoints_as_fractions()[0];
    assert!(
        (bp_radius - 10.0).abs() <= cell_km,
        "breakpoint radius {bp_radius} more than one cell ({cell_km:.3} km) from 10"
    );
    let a1 = 1.0 / fit.slopes[0];
    let a2 = 1.0 / fit.slopes[1];
    assert!((a1 - 2.0).abs() <= 0.04, "inner exponent {a1} off by more than 2%");
    assert!((a2 - 0.5).abs() <= 0.01, "outer exponent {a2} off by more than 2%");

    let mut ok = 0;
    for seed in 1..=20 {
        let noisy = generate_ring_city(&two_ring_spec(0.01, 64, 96, 0.05), seed).unwrap();
        let nf = fit_two_ring(&noisy);
        let n1 = 1.0 / nf.slopes[0];
        let n2 = 1.0 / nf.slopes[1];
        if (n1 - 2.0).abs() <= 0.10 && (n2 - 0.5).abs() <= 0.025 {
            ok += 1;
        }
    }
    assert!(ok >= 18, "only {ok}/20 noisy runs recovered exponents within 5%");
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "two-ring recovery took {secs:.1} s, limit 60 s");
    println!(
        "criterion 4: PASS, breakpoint {bp_radius:.3} km, exponents {a1:.3}/{a2:.3}, \
         noisy {ok}/20, {secs:.2} s"
    );
}

#[test]
fn criterion_05_ring_models_are_continuous_and_mass_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut max_cont: f64 = 0.0;
    let mut max_close: f64 = 0.0;
    let n_fits = 240;
    for i in 0..n_fits {
        let k = i % 4;
        let f_min: f64 = rng.random_range(1e-3..0.05);
        let lo = f_min.ln();
        let mut knots: Vec<f64> = (0..k).map(|_| rng.random_range(lo * 0.95..-0.02)).collect();
        knots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        knots.dedup_by(|x, y| (*x - *y).abs() < 0.05);
        let slopes: Vec<f64> = (0..=knots.len()).map(|_| rng.random_range(0.25..4.0)).collect();
        let fit = RingFit {
            n_segments: slopes.len(),
            breakpoints_logf: knots,
            slopes,
            intercept: rng.random_range(-1.0..3.0),
            rss: 0.0,
            fit_range_logf: (lo, 0.0),
            excluded_low_f: 0,
        };
        let mass = rng.random_range(1e2..1e8);
        let model = vpbounds::ringmodel::model_from_fit_with_mass(&fit, mass).unwrap();

        for w in model.rings.windows(2) {
            assert_eq!(w[0].r_outer_km, w[1].r_inner_km, "rings not contiguous");
            let edge = w[0].r_outer_km;
            let d0 = w[0].density_at(edge);
            let d1 = w[1].density_at(edge);
            let rel = (d0 - d1).abs() / d0.abs().max(d1.abs());
            max_cont = max_cont.max(rel);
            assert!(rel <= 1e-9, "density jump {rel:.2e} at {edge} km");
        }
        let integral: f64 = model
            .rings
            .iter()
            .map(|r| {
                2.0 * std::f64::consts::PI * r.c / r.a
                    * (r.r_outer_km.powf(r.a) - r.r_inner_km.powf(r.a))
            })
            .sum();
        let rel = (integral - mass).abs() / mass;
        max_close = max_close.max(rel);
        assert!(rel <= 1e-9, "mass closure off by {rel:.2e}");
    }
    println!(
        "criterion 5: PASS, {n_fits} models, worst continuity {max_cont:.2e}, \
         worst closure {max_close:.2e}"
    );
}

/// Every cell outside every cluster must reach the frame through
/// non-cluster cells; anything walled in should have been merged.
fn assert_hole_free(bset: &BoundarySet, spec: &GridSpec) {
    let (rows, cols) = (spec.n_rows, spec.n_cols);
    let mut in_cluster = vec![false; rows * cols];
    for cl in &bset.clusters {
        for &(r, c) in &cl.cells {
            in_cluster[r * cols + c] = true;
        }
    }
    let mut seen = vec![false; rows * cols];
    let mut stack = Vec::new();
    for r in 0..rows {
        for c in [0, cols - 1] {
            if !in_cluster[r * cols + c] && !seen[r * cols + c] {
                seen[r * cols + c] = true;
                stack.push((r, c));
            }
        }
    }
    for c in 0..cols {
        for r in [0, rows - 1] {
            if !in_cluster[r * cols + c] && !seen[r * cols + c] {
                seen[r * cols + c] = true;
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        let mut push = |rr: usize, cc: usize, stack: &mut Vec<(usize, usize)>| {
            let i = rr * cols + cc;
            if !in_cluster[i] && !seen[i] {
                seen[i] = true;
                stack.push((rr, cc));
            }
        };
        if r > 0 {
            push(r - 1, c, &mut stack);
        }
        if r + 1 < rows {
            push(r + 1, c, &mut stack);
        }
        if c > 0 {
            push(r, c - 1, &mut stack);
        }
        if c + 1 < cols {
            push(r, c + 1, &mut stack);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            assert!(
                in_cluster[i] || seen[i],
                "cell ({r}, {c}) is neither clustered nor frame-reachable"
            );
        }
    }
}

#[test]
fn criterion_06_clustering_matches_the_exhaustive_oracle() {
    let start = Instant::now();
    let mut checked = 0usize;
    for seed in 0..50u64 {
        let grid = random_grid(1000 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let densities: Vec<f64> = grid
            .nonzero_cells()
            .map(|(r, _, m)| m / grid.spec().cell_area_km2(r))
            .collect();
        let pick = densities[rng.random_range(0..densities.len())];
        let rho0 = pick * rng.random_range(0.5..1.5);
        let connectivity =
            if seed % 2 == 0 { Connectivity::Four } else { Connectivity::Eight };
        let fast = cluster_above(&grid, rho0, connectivity).unwrap();
        let slow = brute_force_clusters(&grid, rho0, connectivity).unwrap();
        assert_eq!(fast, slow, "seed {seed}, rho0 {rho0}");
        assert_hole_free(&fast, grid.spec());
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 5.0, "clustering oracle took {secs:.1} s, limit 5 s");
    println!(
        "criterion 6: PASS, {checked} grids matched the oracle and were hole-free in {secs:.2} s"
    );
}

fn disc_on_plain(discs: &[(f64, f64)]) -> DensityGrid {
    let spec = near(-0.48, -0.64, 0.01, 96, 128);
    let ds: Vec<DiscSpec> = discs
        .iter()
        .map(|&(lat, lon)| DiscSpec { center: (lat, lon), radius_km: 6.0, density: 500.0 })
        .collect();
    generate_plain_with_discs(spec, 20.0, &ds).unwrap()
}

#[test]
fn criterion_07_disc_cities_are_delineated() {
    let grid = disc_on_plain(&[(0.0, 0.0)]);
    let mut search = CitySearch::new(0.0, 0.0, 1);
    search.box_side_km = 60.0;
    let (_, _, _, bset) = city_boundary(&grid, &search).unwrap();
    let rho0 = bset.threshold_density;
    assert!(rho0 > 20.0 && rho0 < 500.0, "threshold {rho0} not strictly between densities");
    let principal = &bset.clusters[bset.principal.expect("principal cluster")];
    let disc_area = std::f64::consts::PI * 36.0;
    let rel = (principal.area_km2 - disc_area).abs() / disc_area;
    assert!(rel <= 0.05, "principal area {}, disc {disc_area}, off {rel:.3}", principal.area_km2);

    let two = disc_on_plain(&[(0.0, -0.09), (0.0, 0.09)]);
    let mut search2 = CitySearch::new(0.0, -0.09, 1);
    search2.box_side_km = 60.0;
    let (_, _, _, bset2) = city_boundary(&two, &search2).unwrap();
    assert_eq!(bset2.clusters.len(), 2, "expected exactly two clusters");
    println!(
        "criterion 7: PASS, threshold {rho0:.1} in (20, 500), area off by {:.1}%, \
         two discs gave 2 clusters",
        rel * 100.0
    );
}

#[test]
fn criterion_08_profiles_agree_across_grid_resolutions() {
    let cases = [(0.02, 32usize, 48usize), (0.01, 64, 96), (0.005, 128, 192)];
    let fractions: Vec<f64> =
        (0..40).map(|i| (0.02f64.ln() * (1.0 - i as f64 / 39.0)).exp()).collect();
    let constraint = SearchConstraint::within_km(0.0, 0.0, 3.0);
    let mut profiles = Vec::new();
    for &(cell, rows, cols) in &cases {
        let grid = generate_ring_city(&two_ring_spec(cell, rows, cols, 0.0), 0).unwrap();
        profiles.push(vp_profile(&grid, &fractions, &constraint).unwrap());
    }
    let coarse_cell_km = 0.02 * vpbounds::geo::EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    let mut compared = 0usize;
    let mut worst: f64 = 0.0;
    for i in 0..fractions.len() {
        if profiles[0].entries[i].cells_included < 20 {
            continue;
        }
        for a in 0..cases.len() {
            for b in a + 1..cases.len() {
                let ra = profiles[a].entries[i].radius_km;
                let rb = profiles[b].entries[i].radius_km;
                let d = (ra - rb).abs();
                worst = worst.max(d);
                assert!(
                    d <= coarse_cell_km,
                    "f {} radii {ra:.3} vs {rb:.3} differ by {d:.3} km, limit {coarse_cell_km:.3}",
                    fractions[i]
                );
                compared += 1;
            }
        }
    }
    assert!(compared > 0, "no fraction spanned 20 cells at the coarse resolution");
    println!(
        "criterion 8: PASS, {compared} radius pairs within one coarse cell \
         (worst {worst:.3} of {coarse_cell_km:.3} km)"
    );
}

#[test]
fn criterion_09_fuzzed_boundaries_pin_interior_and_exterior() {
    let grid = disc_on_plain(&[(0.0, 0.0)]);
    let mut search = CitySearch::new(0.0, 0.0, 1);
    search.box_side_km = 50.0;
    let perturbations = PerturbationSpec {
        search_radii_km: vec![2.0, 5.0, 8.0],
        box_sides_km: vec![40.0, 50.0, 60.0],
        ..Default::default()
    };
    assert_eq!(perturbations.center_offsets_deg.len(), 9);
    let report = fuzz_boundary(&grid, &search, &perturbations).unwrap();
    assert_eq!(report.n_runs, 81);
    assert_eq!(report.n_successes, 81, "failures: {:?}", report.failures);

    let cell_km = 0.01 * vpbounds::geo::EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    let margin = 2.0 * cell_km;
    let freq: HashMap<(usize, usize), f64> =
        report.frequencies.iter().map(|c| ((c.row, c.col), c.frequency)).collect();

    let spec = grid.spec();
    let mut interior = 0usize;
    let mut exterior = 0usize;
    for r in 0..spec.n_rows {
        for c in 0..spec.n_cols {
            let (lat, lon) = spec.cell_center(r, c);
            let d = haversine_km(lat, lon, 0.0, 0.0);
            if d <= 6.0 - margin {
                let f = freq.get(&(r, c)).copied().unwrap_or(0.0);
                assert_eq!(f, 1.0, "interior cell ({r}, {c}) at {d:.2} km has frequency {f}");
                interior += 1;
            } else if d >= 6.0 + margin {
                if let Some(&f) = freq.get(&(r, c)) {
                    assert_eq!(f, 0.0, "exterior cell ({r}, {c}) at {d:.2} km has frequency {f}");
                }
                exterior += 1;
            }
        }
    }
    assert!(interior > 10 && exterior > 1000, "degenerate interior/exterior split");
    println!(
        "criterion 9: PASS, 81 runs, {interior} interior cells at 1.0, \
         {exterior} exterior cells at 0.0"
    );
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) {
    let exe = env!("CARGO_BIN_EXE_vpbounds");
    let out = Command::new(exe)
        .current_dir(dir)
        .env_remove("VPBOUNDS_THREADS")
        .arg("--threads")
        .arg(threads)
        .args(args)
        .output()
        .expect("spawn vpbounds");
    assert!(
        out.status.success(),
        "vpbounds {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn run_pipeline(dir: &Path, threads: &str) {
    for args in [
        vec![
            "synth", "ring-city", "--lat-min", "-0.32", "--lon-min", "-0.48", "--cell-size",
            "0.01", "--rows", "64", "--cols", "96", "--center-lat", "0", "--center-lon", "0",
            "--ring", "10:2", "--ring", "28:0.5", "--total-mass", "500000", "--noise-sigma",
            "0.05", "--seed", "42", "-o", "city.vpgrid",
        ],
        vec![
            "profile", "--grid", "city.vpgrid", "--center-lat", "0", "--center-lon", "0",
            "--search-radius-km", "5", "--box-side-km", "60", "-o", "profile.csv",
        ],
        vec!["fit", "--profile", "profile.csv", "--breakpoints", "1", "-o", "fit.json"],
        vec!["model", "--fit", "fit.json", "-o", "model.json"],
        vec![
            "boundary", "--grid", "city.vpgrid", "--center-lat", "0", "--center-lon", "0",
            "--box-side-km", "60", "--model", "model.json", "-o", "boundary.geojson",
        ],
        vec![
            "fuzz", "--grid", "city.vpgrid", "--center-lat", "0", "--center-lon", "0",
            "--breakpoints", "1", "--offset", "0:0", "--offset", "0.01:0.01", "--radius-km",
            "5", "--box-side-km", "56", "--box-side-km", "60", "-o", "fuzz.csv",
        ],
    ] {
        run_cli(dir, threads, &args);
    }
}

#[test]
fn criterion_10_pipeline_outputs_are_byte_identical() {
    let artifacts = [
        "city.vpgrid",
        "profile.csv",
        "fit.json",
        "model.json",
        "boundary.geojson",
        "fuzz.csv",
        "fuzz.run_000.geojson",
        "fuzz.run_001.geojson",
        "fuzz.run_002.geojson",
        "fuzz.run_003.geojson",
    ];
    let dirs: Vec<tempfile::TempDir> =
        (0..3).map(|_| tempfile::tempdir().expect("tempdir")).collect();
    run_pipeline(dirs[0].path(), "1");
    run_pipeline(dirs[1].path(), "1");
    run_pipeline(dirs[2].path(), "8");
    for name in artifacts {
        let base = std::fs::read(dirs[0].path().join(name)).unwrap_or_else(|e| {
            panic!("missing artifact {name}: {e}");
        });
        for (label, dir) in [("repeat", &dirs[1]), ("threads-8", &dirs[2])] {
            let other = std::fs::read(dir.path().join(name)).unwrap();
            assert_eq!(base, other, "{name} differs between runs ({label})");
        }
    }
    println!(
        "criterion 10: PASS, {} artifacts byte-identical across repeat and 1-vs-8 threads",
        artifacts.len()
    );
}

/// Needs user-supplied census data: set VPBOUNDS_CENSUS_DIR to a
/// directory holding lsoa_population.geojson (Polygon/MultiPolygon
/// features with a numeric `population` property) and run with
/// `cargo test -- --ignored criterion_11`.
#[test]
#[ignore = "requires VPBOUNDS_CENSUS_DIR with census polygons"]
fn criterion_11_census_reproduction() {
    let dir = std::env::var("VPBOUNDS_CENSUS_DIR")
        .expect("set VPBOUNDS_CENSUS_DIR to the census data directory");
    let path = Path::new(&dir).join("lsoa_population.geojson");
    let polys = vpbounds::ingest::load_geojson(&path, Some("population")).unwrap();
    let spec = near(49.8, -6.6, 0.01, 620, 860);
    let grid = vpbounds::polygon::rasterize_polygons(&polys, &spec).unwrap();

    let unconstrained = SearchConstraint::default();
    let c50 =
        vpbounds::vp::vp_circle_coarse_to_fine(&grid, 0.5, &unconstrained, 8).unwrap();
    assert!(
        (c50.center_lat - 51.765).abs() <= 0.05 && (c50.center_lon + 1.005).abs() <= 0.05,
        "half-population centre ({}, {})",
        c50.center_lat,
        c50.center_lon
    );
    assert!((c50.radius_km - 121.4).abs() <= 2.0, "half-population radius {}", c50.radius_km);

    let fractions = vpbounds::vp::default_fractions(&grid).unwrap();
    let profile =
        vpbounds::vp::vp_profile_coarse_to_fine(&grid, &fractions, &unconstrained, 8).unwrap();
    let masked = mask_artifacts(&profile, DEFAULT_MASK_MIN_CELLS).unwrap();
    let fit = fit_piecewise(&masked, 5, None).unwrap();
    let got: Vec<f64> = fit.breakpoints_as_fractions().iter().map(|&(f, _)| f).collect();
    let informative = &got[got.len() - 4..];
    for (g, want) in informative.iter().zip([0.055, 0.131, 0.328, 0.885]) {
        assert!((g - want).abs() <= 0.02, "breakpoint fraction {g} vs {want}");
    }

    let mut search = CitySearch::new(51.507222, -0.1275, 1);
    search.box_side_km = 50.0;
    let (_, _, _, bset) = city_boundary(&grid, &search).unwrap();
    let rho0 = bset.threshold_density;
    assert!(
        (rho0 - 3851.0).abs() <= 0.05 * 3851.0,
        "London threshold {rho0} more than 5% from 3851"
    );
    println!(
        "criterion 11: PASS, centre ({:.3}, {:.3}) r {:.1} km, breakpoints {informative:?}, \
         London threshold {rho0:.0}",
        c50.center_lat, c50.center_lon, c50.radius_km
    );
}

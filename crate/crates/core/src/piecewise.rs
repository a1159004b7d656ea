//! Continuous piecewise-linear fitting of log radius against log fraction.
//!
//! The model is a hinge expansion y = b0 + b1*x + sum_k g_k*max(0, x - t_k):
//! continuous by construction, linear in everything except the knot
//! positions t_k. For fixed knots the coefficients are an exact linear
//! least-squares solve; the knots themselves are found by a seeded
//! differential-evolution search followed by a per-knot golden-section
//! polish, best of 16 restarts. Seeding each knot count with the optimum
//! for one knot fewer guarantees the residual never increases as knots
//! are added.
//!
//! All logarithms are natural; conversions to fractions and kilometres
//! happen only at the reporting boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vp::VpProfile;

/// Minimum data points a segment must cover for its slope to mean much.
const MIN_POINTS_PER_SEGMENT: usize = 3;
/// Slopes this far below zero are treated as noise, not a refusal.
const SLOPE_TOLERANCE: f64 = -1e-9;
/// Default included-cell floor below which profile entries are treated as
/// grid artifacts.
pub const DEFAULT_MASK_MIN_CELLS: usize = 20;

const DE_SEED: u64 = 0x7f4a_7c15_9e37_79b9;
const DE_RESTARTS: u64 = 16;
const DE_GENERATIONS: usize = 120;
const DE_WEIGHT: f64 = 0.7;
const DE_CROSSOVER: f64 = 0.9;
const POLISH_SWEEPS: usize = 3;
const POLISH_ITERS: usize = 48;

/// Continuous piecewise-linear least-squares fit in (log f, log r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingFit {
    /// Number of linear segments (breakpoint count + 1).
    pub n_segments: usize,
    /// Interior knots, strictly increasing, strictly inside the range.
    pub breakpoints_logf: Vec<f64>,
    /// Per-segment d log r / d log f, left to right.
    pub slopes: Vec<f64>,
    /// Fitted log r at the left edge of the fit range.
    pub intercept: f64,
    pub rss: f64,
    /// (min, max) of log f over the points actually fitted.
    pub fit_range_logf: (f64, f64),
    /// Leading entries dropped before fitting (zero radii or entries
    /// below the requested fraction floor).
    pub excluded_low_f: usize,
}

impl RingFit {
    /// Fitted log r at `x` = log f; extrapolates with the first or last
    /// slope outside the fit range.
    pub fn eval_logf(&self, x: f64) -> f64 {
        let mut y = self.intercept;
        let mut x0 = self.fit_range_logf.0;
        for (j, &b) in self.breakpoints_logf.iter().enumerate() {
            if x <= b {
                return y + self.slopes[j] * (x - x0);
            }
            y += self.slopes[j] * (b - x0);
            x0 = b;
        }
        y + self.slopes[self.n_segments - 1] * (x - x0)
    }

    /// Interior breakpoints as (fraction, fitted radius in km).
    pub fn breakpoints_as_fractions(&self) -> Vec<(f64, f64)> {
        self.breakpoints_logf
            .iter()
            .map(|&b| (b.exp(), self.eval_logf(b).exp()))
            .collect()
    }
}

/// Drop leading profile entries whose circles include fewer than
/// `min_cells` cells; such radii are set by grid geometry, not density
/// structure. Interior entries are never dropped.
pub fn mask_artifacts(profile: &VpProfile, min_cells: usize) -> Result<VpProfile> {
    let keep_from = profile
        .entries
        .iter()
        .position(|e| e.cells_included >= min_cells)
        .ok_or(Error::AllMasked { min_cells })?;
    Ok(VpProfile {
        entries: profile.entries[keep_from..].to_vec(),
        total_mass: profile.total_mass,
    })
}

/// Fit a continuous piecewise-linear model with exactly `n_breakpoints`
/// interior knots. `mask_low_f` drops entries below that fraction first;
/// zero-radius entries are always dropped (their logarithm is undefined).
pub fn fit_piecewise(
    profile: &VpProfile,
    n_breakpoints: usize,
    mask_low_f: Option<f64>,
) -> Result<RingFit> {
    let chain = fit_chain(profile, n_breakpoints, mask_low_f)?;
    chain.finish(n_breakpoints)
}

/// Residual sum of squares for every knot count 0..=`k_max` that the data
/// can support, from the same nested search that `fit_piecewise` uses.
pub fn fit_rss_scan(
    profile: &VpProfile,
    k_max: usize,
    mask_low_f: Option<f64>,
) -> Result<Vec<(usize, f64)>> {
    let (points, _) = prepare_points(profile, mask_low_f)?;
    let feasible = points.len() / MIN_POINTS_PER_SEGMENT;
    let k_top = k_max.min(feasible.saturating_sub(1));
    let chain = fit_chain(profile, k_top, mask_low_f)?;
    Ok(chain.stages.iter().enumerate().map(|(k, s)| (k, s.rss)).collect())
}

struct Stage {
    breakpoints: Vec<f64>,
    beta: Vec<f64>,
    rss: f64,
}

struct Chain {
    xs: Vec<f64>,
    stages: Vec<Stage>,
    excluded: usize,
}

impl Chain {
    fn finish(mut self, k: usize) -> Result<RingFit> {
        let stage = self.stages.swap_remove(k);
        let n = self.xs.len();
        for (j, &(lo, hi)) in segment_bounds(&self.xs, &stage.breakpoints).iter().enumerate() {
            let count = count_in_segment(&self.xs, lo, hi, j == k);
            if count < MIN_POINTS_PER_SEGMENT {
                return Err(Error::TooFewPoints { points: n, breakpoints: k });
            }
        }
        let slopes = slopes_from_beta(&stage.beta, k);
        for (j, &s) in slopes.iter().enumerate() {
            if s < SLOPE_TOLERANCE {
                return Err(Error::NegativeSlope { segment: j, slope: s });
            }
        }
        let x_min = self.xs[0];
        let x_max = self.xs[n - 1];
        Ok(RingFit {
            n_segments: k + 1,
            intercept: stage.beta[0] + stage.beta[1] * x_min,
            breakpoints_logf: stage.breakpoints,
            slopes,
            rss: stage.rss,
            fit_range_logf: (x_min, x_max),
            excluded_low_f: self.excluded,
        })
    }
}

fn segment_bounds(xs: &[f64], bks: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = Vec::with_capacity(bks.len() + 2);
    edges.push(xs[0]);
    edges.extend_from_slice(bks);
    edges.push(xs[xs.len() - 1]);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

fn count_in_segment(xs: &[f64], lo: f64, hi: f64, last: bool) -> usize {
    let a = xs.partition_point(|&x| x < lo);
    let b = if last { xs.len() } else { xs.partition_point(|&x| x < hi) };
    b - a
}

fn slopes_from_beta(beta: &[f64], k: usize) -> Vec<f64> {
    let mut slopes = Vec::with_capacity(k + 1);
    let mut s = beta[1];
    slopes.push(s);
    for j in 0..k {
        s += beta[2 + j];
        slopes.push(s);
    }
    slopes
}

fn prepare_points(
    profile: &VpProfile,
    mask_low_f: Option<f64>,
) -> Result<(Vec<(f64, f64)>, usize)> {
    let floor = mask_low_f.unwrap_or(0.0);
    let mut excluded = 0usize;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(profile.entries.len());
    for e in &profile.entries {
        if e.target_fraction < floor || e.radius_km <= 0.0 {
            excluded += 1;
            continue;
        }
        pts.push((e.target_fraction.ln(), e.radius_km.ln()));
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((pts, excluded))
}

fn fit_chain(profile: &VpProfile, k: usize, mask_low_f: Option<f64>) -> Result<Chain> {
    let (pts, excluded) = prepare_points(profile, mask_low_f)?;
    let n = pts.len();
    if n < MIN_POINTS_PER_SEGMENT * (k + 1) {
        return Err(Error::TooFewPoints { points: n, breakpoints: k });
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();

    let line = solve_inner(&xs, &ys, &[]).expect("straight line fit cannot be singular");
    let penalty_scale = 1e6 * (1.0 + line.1);
    let mut stages = vec![Stage { breakpoints: Vec::new(), beta: line.0, rss: line.1 }];

    for kk in 1..=k {
        let seeds = seed_vectors(&xs, &stages[kk - 1].breakpoints, kk);
        let best = search_knots(&xs, &ys, kk, &seeds, penalty_scale);
        stages.push(best);
    }
    Ok(Chain { xs, stages, excluded })
}

/// Exact least squares in the hinge basis at fixed knots, via normal
/// equations. Returns (coefficients, rss); None if the system is
/// numerically singular (e.g. a knot outside the data so two columns
/// coincide).
fn solve_inner(xs: &[f64], ys: &[f64], bks: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = 2 + bks.len();
    let mut ata = vec![0.0; m * m];
    let mut aty = vec![0.0; m];
    let mut v = vec![0.0; m];
    for (&x, &y) in xs.iter().zip(ys) {
        v[0] = 1.0;
        v[1] = x;
        for (j, &b) in bks.iter().enumerate() {
            v[2 + j] = (x - b).max(0.0);
        }
        for r in 0..m {
            for c in r..m {
                ata[r * m + c] += v[r] * v[c];
            }
            aty[r] += v[r] * y;
        }
    }
    for r in 1..m {
        for c in 0..r {
            ata[r * m + c] = ata[c * m + r];
        }
    }
    let beta = solve_symmetric(&mut ata, &mut aty, m)?;
    let mut rss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let mut pred = beta[0] + beta[1] * x;
        for (j, &b) in bks.iter().enumerate() {
            pred += beta[2 + j] * (x - b).max(0.0);
        }
        let resid = y - pred;
        rss += resid * resid;
    }
    Some((beta, rss))
}

/// Gaussian elimination with partial pivoting on an m-by-m system stored
/// row-major in `a`.
fn solve_symmetric(a: &mut [f64], b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let scale = (0..m).map(|i| a[i * m + i].abs()).fold(0.0, f64::max).max(1.0);
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&r1, &r2| a[r1 * m + col].abs().partial_cmp(&a[r2 * m + col].abs()).unwrap())
            .unwrap();
        if a[pivot_row * m + col].abs() < 1e-12 * scale {
            return None;
        }
        if pivot_row != col {
            for c in 0..m {
                a.swap(col * m + c, pivot_row * m + c);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * m + col];
        for row in col + 1..m {
            let factor = a[row * m + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..m {
                a[row * m + c] -= factor * a[col * m + c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for c in row + 1..m {
            acc -= a[row * m + c] * x[c];
        }
        x[row] = acc / a[row * m + row];
    }
    Some(x)
}

/// Penalized objective: exact inner rss plus large penalties for
/// under-populated segments and negative slopes, which steers the knot
/// search without constraining the final exact solve.
fn objective(
    xs: &[f64],
    ys: &[f64],
    bks: &[f64],
    penalty_scale: f64,
) -> (f64, Option<(Vec<f64>, f64)>) {
    match solve_inner(xs, ys, bks) {
        None => (f64::INFINITY, None),
        Some((beta, rss)) => {
            let mut penalty = 0.0;
            for (j, (lo, hi)) in segment_bounds(xs, bks).into_iter().enumerate() {
                let count = count_in_segment(xs, lo, hi, j == bks.len());
                penalty += (MIN_POINTS_PER_SEGMENT.saturating_sub(count)) as f64;
            }
            for &s in &slopes_from_beta(&beta, bks.len()) {
                penalty += (-s).max(0.0);
            }
            (rss + penalty_scale * penalty, Some((beta, rss)))
        }
    }
}

/// Seed knot vectors for k knots: the (k-1)-knot optimum with one knot
/// inserted at the data median of each segment, plus equal-count and
/// equal-spacing layouts.
fn seed_vectors(xs: &[f64], prev: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let (lo, hi) = knot_bounds(xs);
    let mut seeds = Vec::new();
    for (slo, shi) in segment_bounds(xs, prev) {
        let a = xs.partition_point(|&x| x < slo);
        let b = xs.partition_point(|&x| x <= shi).max(a + 1);
        let mid = xs[(a + b) / 2];
        let mut v = prev.to_vec();
        v.push(mid.clamp(lo, hi));
        v.sort_by(|p, q| p.partial_cmp(q).unwrap());
        seeds.push(v);
    }
    let quantiles: Vec<f64> =
        (1..=k).map(|j| xs[(n * j / (k + 1)).min(n - 1)].clamp(lo, hi)).collect();
    seeds.push(quantiles);
    let spaced: Vec<f64> =
        (1..=k).map(|j| lo + (hi - lo) * j as f64 / (k + 1) as f64).collect();
    seeds.push(spaced);
    seeds
}

fn knot_bounds(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    (xs[MIN_POINTS_PER_SEGMENT - 1], xs[n - MIN_POINTS_PER_SEGMENT])
}

/// Differential evolution (rand/1/bin) over sorted knot vectors, then a
/// golden-section polish of each knot; best of 16 seeded restarts under
/// the total order (penalized rss, lexicographic knots), so the result is
/// reproducible bit for bit.
fn search_knots(
    xs: &[f64],
    ys: &[f64],
    k: usize,
    seeds: &[Vec<f64>],
    penalty_scale: f64,
) -> Stage {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..DE_RESTARTS {
        let candidate = de_restart(xs, ys, k, seeds, penalty_scale, restart);
        let replace = match &best {
            None => true,
            Some((pen, bks)) => {
                candidate.0 < *pen || (candidate.0 == *pen && candidate.1 < *bks)
            }
        };
        if replace {
            best = Some(candidate);
        }
    }
    let (_, bks) = best.expect("at least one restart ran");
    let (beta, rss) = solve_inner(xs, ys, &bks)
        .expect("optimal knots solved during the search");
    Stage { breakpoints: bks, beta, rss }
}

fn de_restart(
    xs: &[f64],
    ys: &[f64],
    k: usize,
    seeds: &[Vec<f64>],
    penalty_scale: f64,
    restart: u64,
) -> (f64, Vec<f64>) {
    let (lo, hi) = knot_bounds(xs);
    let mut rng = ChaCha8Rng::seed_from_u64(
        DE_SEED ^ restart.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (k as u64),
    );
    let np = 20.max(15 * k);
    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(np);
    for seed in seeds.iter().take(np) {
        let mut v: Vec<f64> = seed.iter().map(|&b| b.clamp(lo, hi)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pop.push(v);
    }
    while pop.len() < np {
        let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pop.push(v);
    }
    let mut pens: Vec<f64> =
        pop.iter().map(|v| objective(xs, ys, v, penalty_scale).0).collect();

    let mut stagnant = 0usize;
    let mut best_pen = f64::INFINITY;
    for _ in 0..DE_GENERATIONS {
        for i in 0..np {
            let mut pick = || loop {
                let j = rng.random_range(0..np);
                if j != i {
                    return j;
                }
            };
            let (a, b, c) = (pick(), pick(), pick());
            let jrand = rng.random_range(0..k);
            let mut trial = pop[i].clone();
            for j in 0..k {
                if j == jrand || rng.random::<f64>() < DE_CROSSOVER {
                    let mutant = pop[a][j] + DE_WEIGHT * (pop[b][j] - pop[c][j]);
                    trial[j] = mutant.clamp(lo, hi);
                }
            }
            trial.sort_by(|p, q| p.partial_cmp(q).unwrap());
            let pen = objective(xs, ys, &trial, penalty_scale).0;
            if pen <= pens[i] {
                pop[i] = trial;
                pens[i] = pen;
            }
        }
        let gen_best = pens.iter().cloned().fold(f64::INFINITY, f64::min);
        if gen_best + 1e-15 * (1.0 + gen_best.abs()) < best_pen {
            best_pen = gen_best;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= 30 {
                break;
            }
        }
        let spread = (0..k)
            .map(|j| {
                let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
                for v in &pop {
                    mn = mn.min(v[j]);
                    mx = mx.max(v[j]);
                }
                mx - mn
            })
            .fold(0.0, f64::max);
        if spread < 1e-12 * (hi - lo) {
            break;
        }
    }

    let mut best_i = 0;
    for i in 1..np {
        if pens[i] < pens[best_i] || (pens[i] == pens[best_i] && pop[i] < pop[best_i]) {
            best_i = i;
        }
    }
    let mut bks = pop[best_i].clone();
    let mut pen = pens[best_i];

    let window = ((hi - lo) / 16.0).max(1e-3);
    for _ in 0..POLISH_SWEEPS {
        for j in 0..k {
            let left = if j == 0 { lo } else { bks[j - 1] };
            let right = if j + 1 == k { hi } else { bks[j + 1] };
            let a = (bks[j] - window).max(left);
            let b = (bks[j] + window).min(right);
            if !(a < b) {
                continue;
            }
            let (bj, pj) = golden_min(
                |t| {
                    let mut probe = bks.clone();
                    probe[j] = t;
                    objective(xs, ys, &probe, penalty_scale).0
                },
                a,
                b,
            );
            if pj < pen {
                bks[j] = bj;
                pen = pj;
            }
        }
    }
    (pen, bks)
}

fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..POLISH_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

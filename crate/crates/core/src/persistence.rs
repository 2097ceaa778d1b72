//! Gap-probability estimation: `H(N) = P(f > 0 on the grid in [0, N))`.
//!
//! For real-time processes the event is taken on a grid with an explicit
//! step; refining the grid can only shrink the probability, and
//! [`grid_refinement_check`] reports that chain.

use crate::covariance::gram;
use crate::error::{Error, Result};
use crate::measure::{DualDomain, SpectralMeasure};
use crate::normal::{log_interval_prob, sample_truncated, truncated_mean};
use crate::rng::{pairwise_sum, SeedStream};
use crate::sampler::{sample_cholesky, SampleGrid};
use nalgebra::DMatrix;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    CrudeMc,
    SequentialConditioning,
    ExactOracle,
}

/// One estimate of `ln H(N)` with its log-scale standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleEstimate {
    #[serde(rename = "N")]
    pub n: f64,
    pub grid_step: f64,
    pub log_h: f64,
    pub std_err: f64,
    pub method: EstimateMethod,
    pub n_samples: usize,
    pub seed: u64,
}

impl HoleEstimate {
    pub fn probability(&self) -> f64 {
        self.log_h.exp()
    }

    /// Standard error on the probability scale.
    pub fn probability_std_err(&self) -> f64 {
        self.std_err * self.probability()
    }

    fn certain(n: f64, grid_step: f64, method: EstimateMethod, n_samples: usize, seed: u64) -> Self {
        Self { n, grid_step, log_h: 0.0, std_err: 0.0, method, n_samples, seed }
    }
}

pub fn write_estimates_csv<W: Write>(estimates: &[HoleEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in estimates {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_estimates_csv<R: Read>(input: R) -> Result<Vec<HoleEstimate>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// sequential conditioning

/// Result of the sequential-conditioning estimator for a box probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantEstimate {
    /// `ln p̂`.
    pub log_p: f64,
    /// Standard error of `p̂` divided by `p̂` (log-scale delta method).
    pub rel_std_err: f64,
    pub n_draws: usize,
}

/// Estimate `P(lower_j < X_j < upper_j ∀j)` for `X = L z`, `z` standard
/// Gaussian, `L` lower triangular.
///
/// Coordinates are processed in order; each innovation is drawn from the
/// interval its constraint allows given the earlier ones, and the draw's
/// weight is the product of those interval probabilities (kept in log
/// space). Rows of `L` with a zero diagonal are deterministic given the
/// past and contribute a 0/1 factor.
pub fn sequential_orthant(
    factor: &DMatrix<f64>,
    lower: &[f64],
    upper: &[f64],
    n_draws: usize,
    streams: SeedStream,
) -> Result<OrthantEstimate> {
    let n = factor.nrows();
    if lower.len() != n || upper.len() != n || factor.ncols() != n {
        return Err(Error::InvalidArgument("bounds and factor dimensions disagree".into()));
    }
    if n_draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    if n == 0 {
        return Ok(OrthantEstimate { log_p: 0.0, rel_std_err: 0.0, n_draws });
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|j| (0..=j).map(|i| factor[(j, i)]).collect()).collect();
    let scale = rows.iter().map(|r| r[r.len() - 1].abs()).fold(0.0, f64::max);
    let degenerate = 1e-300_f64.max(scale * 1e-300);

    let log_weights: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = streams.rng(d as u64);
            let mut z = vec![0.0; n];
            let mut logw = 0.0;
            for j in 0..n {
                let row = &rows[j];
                let mean: f64 = row[..j].iter().zip(&z[..j]).map(|(a, b)| a * b).sum();
                let diag = row[j];
                if diag.abs() <= degenerate {
                    if lower[j] < mean && mean < upper[j] {
                        continue;
                    }
                    return f64::NEG_INFINITY;
                }
                let a = (lower[j] - mean) / diag;
                let b = (upper[j] - mean) / diag;
                let lp = log_interval_prob(a, b);
                if lp == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                logw += lp;
                if j + 1 < n {
                    z[j] = sample_truncated(&mut rng, a, b);
                }
            }
            logw
        })
        .collect();

    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroWeight { n_draws });
    }
    let scaled: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let mean = pairwise_sum(&scaled) / n_draws as f64;
    let rel_std_err = if n_draws > 1 {
        let dev: Vec<f64> = scaled.iter().map(|w| (w - mean) * (w - mean)).collect();
        let var = pairwise_sum(&dev) / (n_draws - 1) as f64;
        (var / n_draws as f64).sqrt() / mean
    } else {
        0.0
    };
    Ok(OrthantEstimate { log_p: max + mean.ln(), rel_std_err, n_draws })
}

/// Pivoted Cholesky factor of `cov` in the order that conditions on the
/// most restrictive coordinate first.
///
/// At each step the remaining coordinate with the smallest interval
/// probability, given the earlier coordinates fixed at their truncated
/// means, is moved next. Returns the factor and the bounds in the new order;
/// the box probability is unchanged. Without this, oversampled smooth
/// processes leave near-deterministic coordinates whose conditional means
/// have already drifted outside the box, and every weight collapses.
pub fn ordered_factor(cov: &DMatrix<f64>, lower: &[f64], upper: &[f64]) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let n = cov.nrows();
    let mut s = cov.clone();
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut y = vec![0.0; n];
    let scale = (0..n).map(|i| cov[(i, i)].abs()).fold(0.0, f64::max);
    let tiny = 1e-14 * scale;
    let conditional = |l: &DMatrix<f64>, y: &[f64], s: &DMatrix<f64>, j: usize, i: usize| {
        let mut var = s[(j, j)];
        let mut mean = 0.0;
        for m in 0..i {
            var -= l[(j, m)] * l[(j, m)];
            mean += l[(j, m)] * y[m];
        }
        (var, mean)
    };
    for i in 0..n {
        let mut best = i;
        let mut best_lp = f64::INFINITY;
        for j in i..n {
            let (var, mean) = conditional(&l, &y, &s, j, i);
            let lp = if var > tiny {
                let sd = var.sqrt();
                log_interval_prob((lo[j] - mean) / sd, (hi[j] - mean) / sd)
            } else if lo[j] < mean && mean < hi[j] {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            if lp < best_lp {
                best_lp = lp;
                best = j;
            }
        }
        if best != i {
            s.swap_rows(i, best);
            s.swap_columns(i, best);
            l.swap_rows(i, best);
            lo.swap(i, best);
            hi.swap(i, best);
        }
        let (var, mean) = conditional(&l, &y, &s, i, i);
        if var > tiny {
            let d = var.sqrt();
            l[(i, i)] = d;
            for j in i + 1..n {
                let mut v = s[(j, i)];
                for m in 0..i {
                    v -= l[(j, m)] * l[(i, m)];
                }
                l[(j, i)] = v / d;
            }
            y[i] = truncated_mean((lo[i] - mean) / d, (hi[i] - mean) / d);
        }
    }
    (l, lo, hi)
}

/// Box probability for an explicit covariance matrix (checked positive
/// definite, no jitter).
pub fn orthant_probability(
    cov: &DMatrix<f64>,
    lower: &[f64],
    upper: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<OrthantEstimate> {
    if nalgebra::Cholesky::new(cov.clone()).is_none() {
        return Err(Error::NotPsd { min_eigenvalue: f64::NAN, max_jitter: 0.0 });
    }
    if lower.len() != cov.nrows() || upper.len() != cov.nrows() {
        return Err(Error::InvalidArgument("bounds and covariance dimensions disagree".into()));
    }
    let (l, lo, hi) = ordered_factor(cov, lower, upper);
    sequential_orthant(&l, &lo, &hi, n_draws, SeedStream::new(seed))
}

fn box_on_grid(
    rho: &SpectralMeasure,
    grid: &SampleGrid,
    lower: f64,
    upper: f64,
    n_draws: usize,
    seed: u64,
) -> Result<OrthantEstimate> {
    grid.check_domain(rho.domain())?;
    let g = gram(rho, &grid.points())?;
    let n = grid.count;
    if g.r0 == 0.0 {
        let l = DMatrix::zeros(n, n);
        return sequential_orthant(&l, &vec![lower; n], &vec![upper; n], n_draws, SeedStream::new(seed));
    }
    g.cholesky_factor()?;
    let (l, lo, hi) = ordered_factor(&g.entries, &vec![lower; n], &vec![upper; n]);
    sequential_orthant(&l, &lo, &hi, n_draws, SeedStream::new(seed))
}

/// `P(f(t) + shift > 0` at every grid point of `[0, N))` by sequential
/// conditioning. With `shift = 0` this is the gap probability on the grid.
pub fn hole_sequential(
    rho: &SpectralMeasure,
    n: f64,
    grid_step: f64,
    shift: f64,
    n_draws: usize,
    seed: u64,
) -> Result<HoleEstimate> {
    let method = EstimateMethod::SequentialConditioning;
    let Some(grid) = SampleGrid::half_open(n, grid_step)? else {
        return Ok(HoleEstimate::certain(n, grid_step, method, n_draws, seed));
    };
    let est = box_on_grid(rho, &grid, -shift, f64::INFINITY, n_draws, seed)?;
    Ok(HoleEstimate { n, grid_step, log_h: est.log_p, std_err: est.rel_std_err, method, n_samples: n_draws, seed })
}

/// Crude Monte Carlo: the fraction of exact Cholesky paths that stay
/// positive on the grid. Usable only when `H(N)·n_paths` is in the
/// hundreds; zero successes is an error rather than `ln 0`.
pub fn hole_crude_mc(rho: &SpectralMeasure, n: f64, grid_step: f64, n_paths: usize, seed: u64) -> Result<HoleEstimate> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let method = EstimateMethod::CrudeMc;
    let Some(grid) = SampleGrid::half_open(n, grid_step)? else {
        return Ok(HoleEstimate::certain(n, grid_step, method, n_paths, seed));
    };
    let ens = sample_cholesky(rho, grid, n_paths, seed)?;
    let hits = ens.rows().filter(|r| r.iter().all(|&x| x > 0.0)).count();
    crude_estimate(n, grid_step, hits, n_paths, seed)
}

/// Crude estimates for several `N` from one ensemble on the longest grid,
/// so the success counts are pathwise nested (common random numbers).
pub fn hole_crude_mc_curve(
    rho: &SpectralMeasure,
    lengths: &[f64],
    grid_step: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<(f64, usize)>> {
    let longest = lengths.iter().copied().fold(0.0, f64::max);
    let Some(grid) = SampleGrid::half_open(longest, grid_step)? else {
        return Ok(lengths.iter().map(|&l| (l, n_paths)).collect());
    };
    let ens = sample_cholesky(rho, grid, n_paths, seed)?;
    let mut out = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let count = SampleGrid::half_open(len, grid_step)?.map_or(0, |g| g.count);
        let hits = ens.rows().filter(|r| r[..count].iter().all(|&x| x > 0.0)).count();
        out.push((len, hits));
    }
    Ok(out)
}

/// Wilson-score based estimate (z = 1) from a success count.
pub fn crude_estimate(n: f64, grid_step: f64, hits: usize, n_paths: usize, seed: u64) -> Result<HoleEstimate> {
    if hits == 0 {
        return Err(Error::ZeroSuccesses { n_paths });
    }
    let trials = n_paths as f64;
    let p = hits as f64 / trials;
    let half_width = (p * (1.0 - p) / trials + 1.0 / (4.0 * trials * trials)).sqrt() / (1.0 + 1.0 / trials);
    Ok(HoleEstimate {
        n,
        grid_step,
        log_h: p.ln(),
        std_err: half_width / p,
        method: EstimateMethod::CrudeMc,
        n_samples: n_paths,
        seed,
    })
}

/// `P(max |f| ≤ ε)` over the grid points of `[0, length]`.
pub fn small_ball_estimate(
    rho: &SpectralMeasure,
    epsilon: f64,
    length: f64,
    grid_step: f64,
    n_draws: usize,
    seed: u64,
) -> Result<HoleEstimate> {
    if !(epsilon > 0.0 && length > 0.0) {
        return Err(Error::InvalidArgument(format!("need ε > 0 and L > 0, got {epsilon}, {length}")));
    }
    let grid = SampleGrid::closed(length, grid_step)?;
    small_ball_on_grid(rho, epsilon, length, &grid, n_draws, seed)
}

pub(crate) fn small_ball_on_grid(
    rho: &SpectralMeasure,
    epsilon: f64,
    length: f64,
    grid: &SampleGrid,
    n_draws: usize,
    seed: u64,
) -> Result<HoleEstimate> {
    let est = box_on_grid(rho, grid, -epsilon, epsilon, n_draws, seed)?;
    Ok(HoleEstimate {
        n: length,
        grid_step: grid.step,
        log_h: est.log_p,
        std_err: est.rel_std_err,
        method: EstimateMethod::SequentialConditioning,
        n_samples: n_draws,
        seed,
    })
}

// ---------------------------------------------------------------------------
// exact oracle

/// Exact probability that `Y_{-1} < Y_0 < … < Y_{N-1}` for i.i.d.
/// continuous `Y`, i.e. that `X_j = Y_j − Y_{j−1} > 0` for `j = 0..N−1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingProbability {
    pub n: u32,
    pub exact: Ratio<u128>,
    pub value: f64,
}

impl OrderingProbability {
    pub fn as_estimate(&self) -> HoleEstimate {
        HoleEstimate {
            n: f64::from(self.n),
            grid_step: 1.0,
            log_h: self.value.ln(),
            std_err: 0.0,
            method: EstimateMethod::ExactOracle,
            n_samples: 0,
            seed: 0,
        }
    }
}

/// `1/(N+1)!` for `1 ≤ N ≤ 20`.
pub fn ordering_oracle(n: u32) -> Result<OrderingProbability> {
    if !(1..=20).contains(&n) {
        return Err(Error::OutOfRange(n));
    }
    let denom: u128 = (1..=u128::from(n) + 1).product();
    let exact = Ratio::new(1u128, denom);
    Ok(OrderingProbability { n, exact, value: 1.0 / denom as f64 })
}

// ---------------------------------------------------------------------------
// decay fits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    /// `−ln H ≈ θN + b`
    Linear,
    /// `−ln H ≈ θ N ln N + b`
    NLogN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub theta: f64,
    pub theta_stderr: f64,
    pub intercept: f64,
    pub n_points: usize,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub regressor: Regressor,
    pub weighted: bool,
}

pub fn decay_fit(estimates: &[HoleEstimate]) -> Result<DecayFit> {
    decay_fit_with(estimates, Regressor::Linear)
}

/// Least squares of `−ln Ĥ` on `N` (or `N ln N`) with an intercept,
/// weighted by `1/std_err²` when every standard error is positive.
pub fn decay_fit_with(estimates: &[HoleEstimate], regressor: Regressor) -> Result<DecayFit> {
    if estimates.len() < 3 {
        return Err(Error::InsufficientPoints { got: estimates.len(), need: 3 });
    }
    if estimates.windows(2).any(|w| !(w[1].n > w[0].n)) {
        return Err(Error::InvalidArgument("estimates must have strictly increasing N".into()));
    }
    if estimates.iter().any(|e| !e.std_err.is_finite() || !e.log_h.is_finite()) {
        return Err(Error::InvalidArgument("estimates must have finite log_h and std_err".into()));
    }
    let x: Vec<f64> = estimates
        .iter()
        .map(|e| match regressor {
            Regressor::Linear => e.n,
            Regressor::NLogN => e.n * e.n.ln(),
        })
        .collect();
    let y: Vec<f64> = estimates.iter().map(|e| -e.log_h).collect();
    let weighted = estimates.iter().all(|e| e.std_err > 0.0);
    let w: Vec<f64> = if weighted {
        estimates.iter().map(|e| 1.0 / (e.std_err * e.std_err)).collect()
    } else {
        vec![1.0; estimates.len()]
    };
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - xm) * (x - xm)).sum();
    let sxy: f64 = w.iter().zip(&x).zip(&y).map(|((w, x), y)| w * (x - xm) * (y - ym)).sum();
    let theta = sxy / sxx;
    let intercept = ym - theta * xm;
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(x, y)| y - theta * x - intercept).collect();
    let rss: f64 = w.iter().zip(&residuals).map(|(w, r)| w * r * r).sum();
    let tss: f64 = w.iter().zip(&y).map(|(w, y)| w * (y - ym) * (y - ym)).sum();
    let dof = (estimates.len() - 2) as f64;
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let theta_stderr = if weighted {
        ((rss / dof).max(1.0) / sxx).sqrt()
    } else {
        (rss / dof / sxx).sqrt()
    };
    Ok(DecayFit { theta, theta_stderr, intercept, n_points: estimates.len(), r_squared, residuals, regressor, weighted })
}

// ---------------------------------------------------------------------------
// grid refinement

#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub n: f64,
    pub grid_step: f64,
    pub estimate: HoleEstimate,
    /// Paths positive on this grid, out of a common ensemble on the finest
    /// grid.
    pub pathwise_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub rows: Vec<RefinementRow>,
    /// Coarser-grid estimates dominate finer ones within the tolerance.
    pub estimates_monotone: bool,
    /// Pathwise counts never increase as the grid is refined.
    pub counts_monotone: bool,
    pub n_paths: usize,
    pub sigma_tolerance: f64,
}

/// Check that coarser grids give larger gap probabilities.
///
/// Each `(N, step)` is estimated by sequential conditioning; in addition a
/// single crude ensemble on the finest grid is restricted to each coarser
/// grid, giving exactly nested success counts. `steps` must be listed
/// coarse to fine, each dividing the previous.
pub fn grid_refinement_check(
    rho: &SpectralMeasure,
    lengths: &[f64],
    steps: &[f64],
    n_draws: usize,
    n_paths: usize,
    seed: u64,
    sigma_tolerance: f64,
) -> Result<RefinementReport> {
    if rho.domain() != DualDomain::RealTime {
        return Err(Error::InvalidArgument("grid refinement applies to real-time measures".into()));
    }
    let support = rho
        .bands()
        .iter()
        .map(|b| b.hi)
        .chain(rho.atoms().iter().map(|a| a.lambda))
        .chain(rho.tabulated_parts().iter().map(|t| t.last()))
        .fold(0.0, f64::max);
    if support > PI + 1e-12 {
        return Err(Error::InvalidArgument("measure must be supported in [-π, π]".into()));
    }
    let finest = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let longest = lengths.iter().copied().fold(0.0, f64::max);
    let fine_grid = SampleGrid::half_open(longest, finest)?
        .ok_or_else(|| Error::InvalidArgument("empty refinement grid".into()))?;
    let ens = sample_cholesky(rho, fine_grid, n_paths, seed)?;

    let mut rows = Vec::new();
    for &n in lengths {
        for &step in steps {
            let stride = (step / finest).round() as usize;
            let count = SampleGrid::half_open(n, step)?.map_or(0, |g| g.count);
            let hits = ens
                .rows()
                .filter(|r| (0..count).all(|j| r[j * stride] > 0.0))
                .count();
            let estimate = hole_sequential(rho, n, step, 0.0, n_draws, seed)?;
            rows.push(RefinementRow { n, grid_step: step, estimate, pathwise_count: hits });
        }
    }
    let mut estimates_monotone = true;
    let mut counts_monotone = true;
    for chunk in rows.chunks(steps.len()) {
        for w in chunk.windows(2) {
            let (coarse, fine) = (&w[0], &w[1]);
            let joint = (coarse.estimate.probability_std_err().powi(2) + fine.estimate.probability_std_err().powi(2)).sqrt();
            if coarse.estimate.probability() < fine.estimate.probability() - sigma_tolerance * joint {
                estimates_monotone = false;
            }
            if coarse.pathwise_count < fine.pathwise_count {
                counts_monotone = false;
            }
        }
    }
    Ok(RefinementReport { rows, estimates_monotone, counts_monotone, n_paths, sigma_tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_oracle_small_cases() {
        assert_eq!(ordering_oracle(1).unwrap().exact, Ratio::new(1, 2));
        assert_eq!(ordering_oracle(2).unwrap().exact, Ratio::new(1, 6));
        assert_eq!(ordering_oracle(3).unwrap().exact, Ratio::new(1, 24));
        assert!(ordering_oracle(0).is_err());
        assert!(ordering_oracle(21).is_err());
        assert!(ordering_oracle(20).unwrap().value > 0.0);
    }

    #[test]
    fn identity_orthant_is_exact() {
        for n in [1usize, 5, 30] {
            let cov = DMatrix::identity(n, n);
            let est = orthant_probability(&cov, &vec![0.0; n], &vec![f64::INFINITY; n], 50, 1).unwrap();
            assert!((est.log_p - n as f64 * 0.5f64.ln()).abs() < 1e-12);
            assert!(est.rel_std_err < 1e-12);
        }
    }

    #[test]
    fn empty_interval_gives_certain_event() {
        let rho = SpectralMeasure::sinc();
        let e = hole_sequential(&rho, 0.0, 1.0, 0.0, 10, 1).unwrap();
        assert_eq!(e.log_h, 0.0);
        let c = hole_crude_mc(&rho, 0.0, 1.0, 10, 1).unwrap();
        assert_eq!(c.log_h, 0.0);
    }

    #[test]
    fn zero_successes_is_an_error() {
        let rho = SpectralMeasure::sinc();
        assert!(matches!(hole_crude_mc(&rho, 40.0, 1.0, 20, 3), Err(Error::ZeroSuccesses { .. })));
    }

    #[test]
    fn zero_measure_small_ball_is_certain() {
        let zero = SpectralMeasure::zero(DualDomain::RealTime);
        let e = small_ball_estimate(&zero, 0.5, 4.0, 0.25, 10, 1).unwrap();
        assert_eq!(e.log_h, 0.0);
    }

    #[test]
    fn single_point_small_ball() {
        let rho = SpectralMeasure::atom(DualDomain::RealTime, 0.0, 1.0).unwrap();
        // one grid point: [0, 0.1] with step 1
        let e = small_ball_estimate(&rho, 1.0, 0.1, 1.0, 100, 1).unwrap();
        let exact = 2.0 * crate::normal::cdf(1.0) - 1.0;
        assert!((e.probability() - exact).abs() < 1e-12);
        let wide = small_ball_estimate(&rho, 1e6, 0.1, 1.0, 100, 1).unwrap();
        assert!(wide.log_h.abs() < 1e-12);
    }

    #[test]
    fn synthetic_linear_fit() {
        let est: Vec<HoleEstimate> = (1..=6)
            .map(|n| HoleEstimate {
                n: f64::from(n),
                grid_step: 1.0,
                log_h: -0.5 * f64::from(n),
                std_err: 0.01,
                method: EstimateMethod::ExactOracle,
                n_samples: 0,
                seed: 0,
            })
            .collect();
        let fit = decay_fit(&est).unwrap();
        assert!((fit.theta - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(decay_fit(&est[..2]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let e = vec![HoleEstimate {
            n: 4.0,
            grid_step: 0.25,
            log_h: -2.5,
            std_err: 0.01,
            method: EstimateMethod::SequentialConditioning,
            n_samples: 1000,
            seed: 7,
        }];
        let mut buf = Vec::new();
        write_estimates_csv(&e, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("N,grid_step,log_h,std_err,method,n_samples,seed\n"));
        assert_eq!(read_estimates_csv(buf.as_slice()).unwrap(), e);
    }
}

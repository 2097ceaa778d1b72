//! Seeded path ensembles on finite grids.
//!
//! Every path `i` draws from its own counter-based stream `i`, so ensembles
//! are a pure function of `(inputs, seed)` whatever the rayon pool size.

use crate::covariance::gram;
use crate::error::{Error, Result};
use crate::measure::{DualDomain, SpectralMeasure};
use crate::rng::SeedStream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const DEFAULT_MAX_GRID: usize = 2048;

/// Relative tolerance used when matching lattice points to grid points.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl SampleGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid needs finite start and positive step, got {start}, {step}")));
        }
        if count == 0 {
            return Err(Error::InvalidArgument("grid must have at least one point".into()));
        }
        Ok(Self { start, step, count })
    }

    /// Grid points `j·step` lying in `[0, length)`; may be empty.
    pub fn half_open(length: f64, step: f64) -> Result<Option<Self>> {
        if !(step > 0.0) || !(length >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad interval length {length} or step {step}")));
        }
        let ratio = length / step;
        let near = ratio.round();
        let count = if (ratio - near).abs() <= ALIGN_TOL * near.max(1.0) {
            near as usize
        } else {
            ratio.ceil() as usize
        };
        if count == 0 {
            return Ok(None);
        }
        Self::new(0.0, step, count).map(Some)
    }

    /// Grid points `j·step` lying in `[0, length]`.
    pub fn closed(length: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(length >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad interval length {length} or step {step}")));
        }
        let ratio = length / step;
        let near = ratio.round();
        let last = if (ratio - near).abs() <= ALIGN_TOL * near.max(1.0) {
            near as usize
        } else {
            ratio.floor() as usize
        };
        Self::new(0.0, step, last + 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.start + self.step * i as f64).collect()
    }

    /// Integer-time processes can only be evaluated at integers.
    pub fn check_domain(&self, domain: DualDomain) -> Result<()> {
        if domain == DualDomain::IntegerTime && (self.step.fract() != 0.0 || self.start.fract() != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "integer-time grid needs integer start and step, got start {} step {}",
                self.start, self.step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    Cholesky,
    Spectral,
    Sum,
    DifferencedNoise,
}

/// `n_paths × count` sampled values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub grid: SampleGrid,
    pub values: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub method: SamplingMethod,
    /// Bound on `|r_modes(t) − r(t)|` over the grid lags, for spectral
    /// sampling.
    pub covariance_error_bound: Option<f64>,
}

impl PathEnsemble {
    fn from_rows(grid: SampleGrid, rows: Vec<Vec<f64>>, seed: u64, method: SamplingMethod) -> Self {
        let n_paths = rows.len();
        let values = rows.into_iter().flatten().collect();
        Self { grid, values, n_paths, seed, method, covariance_error_bound: None }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.count;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.grid.count)
    }

    /// `(1/n) Σ x_i x_j` over paths; the processes are centred.
    pub fn empirical_covariance(&self) -> DMatrix<f64> {
        let n = self.grid.count;
        let mut c = DMatrix::zeros(n, n);
        for row in self.rows() {
            for i in 0..n {
                for j in 0..=i {
                    c[(i, j)] += row[i] * row[j];
                }
            }
        }
        let scale = 1.0 / self.n_paths as f64;
        for i in 0..n {
            for j in 0..=i {
                c[(i, j)] *= scale;
                c[(j, i)] = c[(i, j)];
            }
        }
        c
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["path".to_string()];
        header.extend(self.grid.points().iter().map(|t| format!("t={t}")));
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_grid(rho: &SpectralMeasure, grid: &SampleGrid, max_grid: usize) -> Result<()> {
    grid.check_domain(rho.domain())?;
    if grid.count > max_grid {
        return Err(Error::GridTooLarge { count: grid.count, max: max_grid });
    }
    Ok(())
}

/// Exact finite-dimensional sampling through the Cholesky factor of the
/// Gram matrix.
pub fn sample_cholesky(rho: &SpectralMeasure, grid: SampleGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    sample_cholesky_stream(rho, grid, n_paths, SeedStream::new(seed), seed, DEFAULT_MAX_GRID)
}

pub(crate) fn sample_cholesky_stream(
    rho: &SpectralMeasure,
    grid: SampleGrid,
    n_paths: usize,
    streams: SeedStream,
    seed: u64,
    max_grid: usize,
) -> Result<PathEnsemble> {
    check_grid(rho, &grid, max_grid)?;
    let g = gram(rho, &grid.points())?;
    let l = g.cholesky_factor()?;
    let n = grid.count;
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(i as u64);
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            (&l * z).iter().copied().collect()
        })
        .collect();
    Ok(PathEnsemble::from_rows(grid, rows, seed, SamplingMethod::Cholesky))
}

/// One spectral mode: `√weight (a cos λt + b sin λt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMode {
    pub lambda: f64,
    /// Symmetrized mass carried by the mode.
    pub weight: f64,
    /// Width of the frequency bin (zero for atoms).
    pub width: f64,
}

/// Mode decomposition: one mode per atom, the continuous part cut into
/// equal-mass bins represented by their centroids.
pub fn spectral_modes(rho: &SpectralMeasure, n_modes: usize) -> Result<Vec<SpectralMode>> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("need at least one spectral mode".into()));
    }
    let mut modes: Vec<SpectralMode> = rho
        .atoms()
        .iter()
        .map(|a| SpectralMode { lambda: a.lambda, weight: a.symmetric_mass(), width: 0.0 })
        .collect();
    let pieces = rho.density_pieces();
    let half_mass: f64 = pieces.iter().map(|p| p.mass()).sum();
    if half_mass <= 0.0 {
        return Ok(modes);
    }
    let n_bins = n_modes.saturating_sub(modes.len()).max(1);
    let target = half_mass / n_bins as f64;

    let mut bin_mass = 0.0;
    let mut bin_moment = 0.0;
    let mut bin_lo = pieces[0].x0;
    let mut bins_done = 0usize;
    for p in &pieces {
        let slope = (p.d1 - p.d0) / (p.x1 - p.x0);
        let mut u0 = p.x0;
        loop {
            let a = p.eval(u0);
            let w = p.x1 - u0;
            let remaining_piece = a * w + 0.5 * slope * w * w;
            let need = target - bin_mass;
            let last_bin = bins_done + 1 == n_bins;
            if last_bin || remaining_piece < need {
                bin_mass += remaining_piece;
                bin_moment += first_moment(u0, a, slope, w);
                break;
            }
            // advance u0 by the width that carries exactly `need`
            let step = 2.0 * need / (a + (a * a + 2.0 * slope * need).max(0.0).sqrt());
            let step = step.clamp(0.0, w);
            bin_mass += need;
            bin_moment += first_moment(u0, a, slope, step);
            let u1 = u0 + step;
            modes.push(SpectralMode { lambda: bin_moment / bin_mass, weight: 2.0 * bin_mass, width: u1 - bin_lo });
            bins_done += 1;
            bin_mass = 0.0;
            bin_moment = 0.0;
            bin_lo = u1;
            u0 = u1;
            if u0 >= p.x1 {
                break;
            }
        }
    }
    if bin_mass > 0.0 {
        let hi = pieces.last().unwrap().x1;
        modes.push(SpectralMode { lambda: bin_moment / bin_mass, weight: 2.0 * bin_mass, width: hi - bin_lo });
    }
    Ok(modes)
}

/// `∫_{u0}^{u0+w} x (a + s(x − u0)) dx`.
fn first_moment(u0: f64, a: f64, s: f64, w: f64) -> f64 {
    a * u0 * w + (a + s * u0) * w * w / 2.0 + s * w * w * w / 3.0
}

/// Covariance implied by a mode set.
pub fn mode_covariance(modes: &[SpectralMode], t: f64) -> f64 {
    modes.iter().map(|m| m.weight * (m.lambda * t).cos()).sum()
}

/// Worst-case `|r_modes(t) − r(t)|` for `|t| ≤ t_max`; each bin contributes
/// at most `w·min(2, t_max²·width²/2)` because its node is the centroid.
pub fn mode_error_bound(modes: &[SpectralMode], t_max: f64) -> f64 {
    modes
        .iter()
        .map(|m| m.weight * (0.5 * (t_max * m.width).powi(2)).min(2.0))
        .sum()
}

/// Random-phase superposition of spectral modes. Exact in law for pure
/// atom measures; with a single mode a band is replaced by one cosine and
/// the result is badly biased.
pub fn sample_spectral(
    rho: &SpectralMeasure,
    grid: SampleGrid,
    n_modes: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_grid(rho, &grid, usize::MAX)?;
    let modes = spectral_modes(rho, n_modes)?;
    let points = grid.points();
    let streams = SeedStream::new(seed);
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(i as u64);
            let coef: Vec<(f64, f64)> = modes
                .iter()
                .map(|m| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    let s = m.weight.sqrt();
                    (s * a, s * b)
                })
                .collect();
            points
                .iter()
                .map(|&t| {
                    modes
                        .iter()
                        .zip(&coef)
                        .map(|(m, (a, b))| {
                            let (sin, cos) = (m.lambda * t).sin_cos();
                            a * cos + b * sin
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut ens = PathEnsemble::from_rows(grid, rows, seed, SamplingMethod::Spectral);
    let t_max = grid.step * (grid.count.saturating_sub(1)) as f64;
    ens.covariance_error_bound = Some(mode_error_bound(&modes, t_max));
    Ok(ens)
}

/// Pathwise sum of independent ensembles for `ρ1` and `ρ2`, each drawn
/// from its own sub-stream of `seed`.
pub fn sample_sum(
    rho1: &SpectralMeasure,
    rho2: &SpectralMeasure,
    grid: SampleGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if rho1.domain() != rho2.domain() {
        return Err(Error::InvalidArgument("summands must share a domain".into()));
    }
    let root = SeedStream::new(seed);
    let a = sample_cholesky_stream(rho1, grid, n_paths, root.child(1), seed, DEFAULT_MAX_GRID)?;
    let b = sample_cholesky_stream(rho2, grid, n_paths, root.child(2), seed, DEFAULT_MAX_GRID)?;
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
    Ok(PathEnsemble { grid, values, n_paths, seed, method: SamplingMethod::Sum, covariance_error_bound: None })
}

/// `X_j = Y_j − Y_{j−1}`, `j = 0..n−1`, for i.i.d. standard Gaussian `Y`.
pub fn sample_differenced_noise(n: usize, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    let grid = SampleGrid::new(0.0, 1.0, n)?;
    let streams = SeedStream::new(seed);
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(i as u64);
            let y: Vec<f64> = (0..=n).map(|_| rng.sample(StandardNormal)).collect();
            y.windows(2).map(|w| w[1] - w[0]).collect()
        })
        .collect();
    Ok(PathEnsemble::from_rows(grid, rows, seed, SamplingMethod::DifferencedNoise))
}

/// Sub-ensemble on the translated lattice `{jk + l}`.
pub fn lattice_restrict(ensemble: &PathEnsemble, k: u32, l: f64) -> Result<PathEnsemble> {
    let kf = f64::from(k);
    if k == 0 || !(0.0..kf).contains(&l) {
        return Err(Error::InvalidArgument(format!("lattice needs k >= 1 and l in [0, k), got k={k}, l={l}")));
    }
    let g = ensemble.grid;
    let stride_f = kf / g.step;
    let stride = stride_f.round();
    let offset_f = (l - g.start) / g.step;
    let offset = offset_f.round();
    if (stride_f - stride).abs() > ALIGN_TOL * stride.max(1.0) || (offset_f - offset).abs() > ALIGN_TOL * offset.abs().max(1.0) {
        return Err(Error::LatticeMisaligned { k, offset: l });
    }
    let stride = stride as i64;
    let first = (offset as i64).rem_euclid(stride) as usize;
    let cols: Vec<usize> = (first..g.count).step_by(stride as usize).collect();
    if cols.is_empty() {
        return Err(Error::LatticeMisaligned { k, offset: l });
    }
    let grid = SampleGrid::new(g.start + g.step * first as f64, kf, cols.len())?;
    let rows = ensemble.rows().map(|row| cols.iter().map(|&c| row[c]).collect()).collect();
    let mut out = PathEnsemble::from_rows(grid, rows, ensemble.seed, ensemble.method);
    out.covariance_error_bound = ensemble.covariance_error_bound;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::covariance;
    use std::f64::consts::PI;

    #[test]
    fn half_open_grid_counts() {
        assert_eq!(SampleGrid::half_open(4.0, 1.0).unwrap().unwrap().count, 4);
        assert_eq!(SampleGrid::half_open(4.0, 0.25).unwrap().unwrap().count, 16);
        assert_eq!(SampleGrid::half_open(1.1, 0.5).unwrap().unwrap().count, 3);
        assert!(SampleGrid::half_open(0.0, 1.0).unwrap().is_none());
        assert_eq!(SampleGrid::closed(5.0, 0.25).unwrap().count, 21);
    }

    #[test]
    fn integer_grid_rejects_fractional_step() {
        let rho = SpectralMeasure::band(DualDomain::IntegerTime, 0.0, PI, 1.0).unwrap();
        let g = SampleGrid::new(0.0, 0.5, 4).unwrap();
        assert!(sample_cholesky(&rho, g, 2, 1).is_err());
    }

    #[test]
    fn grid_limit_enforced() {
        let rho = SpectralMeasure::sinc();
        let g = SampleGrid::new(0.0, 1.0, DEFAULT_MAX_GRID + 1).unwrap();
        assert!(matches!(sample_cholesky(&rho, g, 1, 1), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn cholesky_is_deterministic() {
        let rho = SpectralMeasure::sinc();
        let g = SampleGrid::new(0.0, 0.25, 12).unwrap();
        let a = sample_cholesky(&rho, g, 50, 9).unwrap();
        let b = sample_cholesky(&rho, g, 50, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_cholesky(&rho, g, 50, 10).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn lattice_restrict_index_arithmetic() {
        let rho = SpectralMeasure::sinc();
        let g = SampleGrid::new(0.0, 0.25, 40).unwrap();
        let e = sample_cholesky(&rho, g, 3, 1).unwrap();
        assert_eq!(lattice_restrict(&e, 1, 0.0).unwrap().grid.count, 10);
        let r = lattice_restrict(&e, 2, 0.5).unwrap();
        assert_eq!(r.grid.start, 0.5);
        assert_eq!(r.grid.count, 5);
        for p in 0..3 {
            let expected: Vec<f64> = (2..40).step_by(8).map(|c| e.row(p)[c]).collect();
            assert_eq!(r.row(p), expected.as_slice());
        }
        assert!(matches!(lattice_restrict(&e, 2, 0.1), Err(Error::LatticeMisaligned { .. })));
        assert!(lattice_restrict(&e, 2, 2.0).is_err());

        let ident = lattice_restrict(&sample_differenced_noise(5, 2, 3).unwrap(), 1, 0.0).unwrap();
        assert_eq!(ident.values, sample_differenced_noise(5, 2, 3).unwrap().values);
    }

    #[test]
    fn single_atom_modes_are_exact() {
        let rho = SpectralMeasure::atom(DualDomain::RealTime, 1.7, 0.5).unwrap();
        let modes = spectral_modes(&rho, 4).unwrap();
        assert_eq!(modes.len(), 1);
        for t in [0.0, 0.3, 5.0] {
            assert!((mode_covariance(&modes, t) - covariance(&rho, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_mass_bins() {
        let t = crate::measure::Tabulated::from_fn(0.0, 2.0, 33, |x| 1.0 + x).unwrap();
        let rho = SpectralMeasure::tabulated(DualDomain::RealTime, t).unwrap();
        let modes = spectral_modes(&rho, 8).unwrap();
        assert_eq!(modes.len(), 8);
        let w0 = modes[0].weight;
        for m in &modes {
            assert!((m.weight - w0).abs() < 1e-12);
        }
        let total: f64 = modes.iter().map(|m| m.weight).sum();
        assert!((total - rho.total_mass()).abs() < 1e-12);
        let widths: f64 = modes.iter().map(|m| m.width).sum();
        assert!((widths - 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_mode_band_is_single_cosine() {
        let rho = SpectralMeasure::band(DualDomain::RealTime, 0.0, 2.0, 1.0).unwrap();
        let modes = spectral_modes(&rho, 1).unwrap();
        assert_eq!(modes.len(), 1);
        assert!((modes[0].lambda - 1.0).abs() < 1e-14);
        assert!((modes[0].weight - 4.0).abs() < 1e-14);
    }

    #[test]
    fn differenced_noise_single_point_variance() {
        let e = sample_differenced_noise(1, 20_000, 5).unwrap();
        let var = e.values.iter().map(|x| x * x).sum::<f64>() / e.n_paths as f64;
        assert!((var - 2.0).abs() < 0.1);
    }
}

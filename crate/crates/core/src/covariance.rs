//! Covariance kernels `r(t) = ∫ cos(λt) dρ(λ)` and Gram matrices.

use crate::error::{Error, Result};
use crate::measure::SpectralMeasure;
use crate::special::{sin_minus_x_cos_over_cube, sinc};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::io::Write;

/// Diagonal jitter schedule, relative to `r(0)`.
pub const JITTER_BASE: f64 = 1e-10;
pub const JITTER_DOUBLINGS: u32 = 4;
/// Eigenvalues below this (relative to `r(0)`) trigger jitter.
pub const PSD_THRESHOLD: f64 = 1e-12;
/// Above this size the eigenvalue check is replaced by trial factorization.
const EIGEN_CHECK_MAX: usize = 512;

/// `r(t)` for a symmetric spectral measure.
///
/// Bands and atoms use closed forms. Tabulated parts are integrated exactly
/// against their linear interpolant on each cell (Filon-type), which stays
/// accurate for large `t·λ`.
pub fn covariance(rho: &SpectralMeasure, t: f64) -> f64 {
    let t = t.abs();
    let mut r = 0.0;
    for b in rho.bands() {
        // 2h (sin βt − sin αt)/t, written to stay accurate near t = 0
        let w = b.hi - b.lo;
        let c = 0.5 * (b.hi + b.lo);
        r += 2.0 * b.height * w * (c * t).cos() * sinc(0.5 * w * t);
    }
    for a in rho.atoms() {
        r += a.symmetric_mass() * (a.lambda * t).cos();
    }
    for tab in rho.tabulated_parts() {
        let mut s = 0.0;
        for (x0, x1, d0, d1) in tab.cells() {
            s += filon_cell(x0, x1, d0, d1, t);
        }
        r += 2.0 * s;
    }
    r
}

/// `∫_{x0}^{x1} (linear interpolant of d0, d1) · cos(tλ) dλ`, exactly.
fn filon_cell(x0: f64, x1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = x1 - x0;
    let half = 0.5 * h;
    let c = 0.5 * (x0 + x1);
    let mean = 0.5 * (d0 + d1);
    let slope = (d1 - d0) / h;
    // even part about the midpoint, then the odd (slope) part
    let even = mean * h * (t * c).cos() * sinc(t * half);
    let odd = -slope * (t * c).sin() * 2.0 * t * half.powi(3) * sin_minus_x_cos_over_cube(t * half);
    even + odd
}

/// Covariance function bound to its spectral measure.
#[derive(Debug, Clone)]
pub struct CovarianceKernel {
    source: SpectralMeasure,
    r0: f64,
}

impl CovarianceKernel {
    pub fn new(source: SpectralMeasure) -> Self {
        let r0 = source.total_mass();
        Self { source, r0 }
    }

    pub fn source(&self) -> &SpectralMeasure {
        &self.source
    }

    /// Variance at lag 0.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.r0;
        }
        covariance(&self.source, t)
    }
}

/// `E|f(s) − f(t)|² = 2(r(0) − r(s − t))`.
pub fn increment_variance(rho: &SpectralMeasure, s: f64, t: f64) -> f64 {
    if s == t {
        return 0.0;
    }
    (2.0 * (rho.total_mass() - covariance(rho, s - t))).max(0.0)
}

/// `L(δ) = sup_{x>0} (1 − cos x)/x^δ` for `0 < δ ≤ 2`.
///
/// Dense scan of `(0, 20]` at step 1e-3 followed by golden-section
/// refinement. Past 20 the ratio is at most `2/20^δ`, which is below the
/// first peak near π for every `δ` in range. `L(2) = 1/2`, approached as
/// `x → 0`.
pub fn holder_l(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0, 2], got {delta}")));
    }
    if delta == 2.0 {
        return Ok(0.5);
    }
    let ratio = |x: f64| {
        // 1 − cos x = 2 sin²(x/2), accurate for small x
        let s = (0.5 * x).sin();
        2.0 * s * s / x.powf(delta)
    };
    let step = 1e-3;
    let mut best_x = step;
    let mut best = ratio(step);
    for i in 2..=20_000 {
        let x = step * f64::from(i);
        let v = ratio(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - step).max(1e-12), best_x + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ratio(c) > ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let refined = ratio(0.5 * (a + b));
    Ok(best.max(refined))
}

/// Hölder constant `c = 2·L(δ)·∫|λ|^δ dρ`, so that
/// `E|f(s) − f(t)|² ≤ c|s − t|^δ`.
pub fn holder_constant(rho: &SpectralMeasure, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0, 2), got {delta}")));
    }
    let moment = rho.moment(delta)?;
    if !moment.is_finite() {
        return Err(Error::Hypothesis(format!("the {delta}-moment is infinite")));
    }
    Ok(2.0 * holder_l(delta)? * moment)
}

/// Gram matrix `r(t_i − t_j)` with the jitter that made it factorable.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub points: Vec<f64>,
    pub entries: DMatrix<f64>,
    pub jitter_applied: f64,
    /// Smallest eigenvalue before jitter; `None` when the matrix was too
    /// large for the eigenvalue check and trial factorization was used.
    pub min_eigenvalue: Option<f64>,
    pub r0: f64,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.points.len()
    }

    /// Lower Cholesky factor of the jittered matrix.
    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>> {
        if self.r0 == 0.0 {
            return Ok(DMatrix::zeros(self.dim(), self.dim()));
        }
        nalgebra::Cholesky::new(self.entries.clone())
            .map(|c| c.unpack())
            .ok_or(Error::NotPsd {
                min_eigenvalue: self.min_eigenvalue.unwrap_or(f64::NAN),
                max_jitter: self.jitter_applied,
            })
    }

    /// Write the matrix as CSV with a header of time points.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.points.iter().map(|t| t.to_string()))?;
        for i in 0..self.dim() {
            w.write_record(self.entries.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Gram matrix of `ρ` on `points`.
///
/// If the smallest eigenvalue is below `1e-12·r(0)`, a diagonal jitter of
/// `1e-10·r(0)` is added and doubled (at most four times) until the matrix
/// factors. Entries are computed in parallel but each one independently,
/// so the result does not depend on the thread count.
pub fn gram(rho: &SpectralMeasure, points: &[f64]) -> Result<GramMatrix> {
    let n = points.len();
    if points.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("gram points must be finite".into()));
    }
    let r0 = rho.total_mass();
    let equispaced = is_equispaced(points);
    let rows: Vec<Vec<f64>> = if equispaced && n > 1 {
        let step = points[1] - points[0];
        let lags: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| if k == 0 { r0 } else { covariance(rho, step * k as f64) })
            .collect();
        (0..n).map(|i| (0..n).map(|j| lags[i.abs_diff(j)]).collect()).collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { r0 } else { covariance(rho, points[i] - points[j]) })
                    .collect()
            })
            .collect()
    };
    let mut entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            entries[(j, i)] = entries[(i, j)];
        }
    }
    if r0 == 0.0 || n == 0 {
        return Ok(GramMatrix { points: points.to_vec(), entries, jitter_applied: 0.0, min_eigenvalue: Some(0.0), r0 });
    }

    let min_eigenvalue = if n <= EIGEN_CHECK_MAX {
        Some(entries.clone().symmetric_eigenvalues().min())
    } else {
        None
    };
    let needs_jitter = match min_eigenvalue {
        Some(ev) => ev < PSD_THRESHOLD * r0,
        None => nalgebra::Cholesky::new(entries.clone()).is_none(),
    };
    if !needs_jitter {
        return Ok(GramMatrix { points: points.to_vec(), entries, jitter_applied: 0.0, min_eigenvalue, r0 });
    }
    let mut jitter = JITTER_BASE * r0;
    for attempt in 0..=JITTER_DOUBLINGS {
        let mut candidate = entries.clone();
        for i in 0..n {
            candidate[(i, i)] += jitter;
        }
        let enough = min_eigenvalue.is_none_or(|ev| ev + jitter >= PSD_THRESHOLD * r0);
        if enough && nalgebra::Cholesky::new(candidate.clone()).is_some() {
            return Ok(GramMatrix { points: points.to_vec(), entries: candidate, jitter_applied: jitter, min_eigenvalue, r0 });
        }
        if attempt < JITTER_DOUBLINGS {
            jitter *= 2.0;
        }
    }
    Err(Error::NotPsd { min_eigenvalue: min_eigenvalue.unwrap_or(f64::NAN), max_jitter: jitter })
}

fn is_equispaced(points: &[f64]) -> bool {
    if points.len() < 2 {
        return true;
    }
    let step = points[1] - points[0];
    if !(step > 0.0) {
        return false;
    }
    let scale = points.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(step);
    points
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (points[0] + step * i as f64)).abs() <= 1e-12 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{DualDomain, Tabulated};
    use std::f64::consts::PI;

    #[test]
    fn band_closed_form_examples() {
        let b = SpectralMeasure::band(DualDomain::RealTime, 0.0, PI, 1.0).unwrap();
        assert!(covariance(&b, 1.0).abs() < 1e-15);
        assert!((covariance(&b, 0.5) - 4.0).abs() < 1e-14);
        assert!((covariance(&b, 0.0) - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn atom_pair_cosine() {
        let a = SpectralMeasure::atom(DualDomain::RealTime, PI / 2.0, 0.5).unwrap();
        assert!((covariance(&a, 2.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_zeros_of_narrow_band() {
        for k in [1u32, 2, 3, 5] {
            let kf = f64::from(k);
            let b = SpectralMeasure::band(DualDomain::RealTime, 0.0, PI / kf, 0.7).unwrap();
            for j in 1..=20 {
                assert!(covariance(&b, kf * f64::from(j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn filon_matches_band_closed_form() {
        let band = SpectralMeasure::band(DualDomain::RealTime, 0.5, 3.0, 2.0).unwrap();
        let tab = SpectralMeasure::tabulated(
            DualDomain::RealTime,
            Tabulated::new(vec![0.5, 1.2, 3.0], vec![2.0, 2.0, 2.0]).unwrap(),
        )
        .unwrap();
        for t in [0.0, 1e-7, 0.3, 1.0, 17.0, 250.0] {
            let a = covariance(&band, t);
            let b = covariance(&tab, t);
            assert!((a - b).abs() <= 1e-8 * band.total_mass(), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn filon_integrates_linear_density_exactly() {
        // density λ on [0, 2]: ∫ λ cos(λt) = [λ sin(λt)/t + cos(λt)/t²]_0^2
        let tab = SpectralMeasure::tabulated(
            DualDomain::RealTime,
            Tabulated::new(vec![0.0, 2.0], vec![0.0, 2.0]).unwrap(),
        )
        .unwrap();
        for t in [0.01f64, 0.7, 3.0, 40.0] {
            let exact = 2.0 * (2.0 * (2.0 * t).sin() / t + ((2.0 * t).cos() - 1.0) / (t * t));
            assert!((covariance(&tab, t) - exact).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn differenced_noise_gram_from_quadrature() {
        let rho = SpectralMeasure::differenced_noise(2049).unwrap();
        let g = gram(&rho, &[0.0, 1.0, 2.0]).unwrap();
        // ∫_{-π}^{π} cos(jλ)·2(1 − cos λ) dλ = 4π, −2π, 0 for j = 0, 1, 2
        let tol = 1e-5;
        assert!((g.entries[(0, 0)] - 4.0 * PI).abs() < tol);
        assert!((g.entries[(0, 1)] + 2.0 * PI).abs() < tol);
        assert!(g.entries[(0, 2)].abs() < tol);
    }

    #[test]
    fn white_noise_gram_is_diagonal() {
        let rho = SpectralMeasure::band(DualDomain::IntegerTime, 0.0, PI, 1.0).unwrap();
        let pts: Vec<f64> = (0..5).map(f64::from).collect();
        let g = gram(&rho, &pts).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 2.0 * PI } else { 0.0 };
                assert!((g.entries[(i, j)] - expect).abs() < 1e-14);
            }
        }
        assert_eq!(g.jitter_applied, 0.0);
    }

    #[test]
    fn single_point_gram() {
        let rho = SpectralMeasure::atom(DualDomain::RealTime, 1.3, 0.4).unwrap();
        let g = gram(&rho, &[3.7]).unwrap();
        assert_eq!(g.entries.shape(), (1, 1));
        assert!((g.entries[(0, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn dense_smooth_grid_gets_jitter() {
        let rho = SpectralMeasure::sinc();
        let pts: Vec<f64> = (0..64).map(|i| 0.05 * f64::from(i)).collect();
        let g = gram(&rho, &pts).unwrap();
        assert!(g.jitter_applied > 0.0);
        assert!(g.cholesky_factor().is_ok());
    }

    #[test]
    fn rank_one_gram_is_jittered_not_rejected() {
        // a single atom at the origin gives a constant (rank one) Gram matrix
        let rho = SpectralMeasure::atom(DualDomain::RealTime, 0.0, 1.0).unwrap();
        let g = gram(&rho, &[0.0, 1.0, 2.0]).unwrap();
        assert!((g.jitter_applied - 1e-10).abs() < 1e-24);
    }

    #[test]
    fn holder_l_values() {
        assert_eq!(holder_l(2.0).unwrap(), 0.5);
        // dense-grid oracle at step 1e-5
        let mut best: f64 = 0.0;
        let mut x: f64 = 1e-5;
        while x <= 20.0 {
            best = best.max((1.0 - x.cos()) / x);
            x += 1e-5;
        }
        assert!((holder_l(1.0).unwrap() - best).abs() < 1e-9);
        let band = SpectralMeasure::band(DualDomain::RealTime, 0.0, 1.0, 1.0).unwrap();
        let c = holder_constant(&band, 0.5).unwrap();
        assert!((c - 2.0 * holder_l(0.5).unwrap() * 4.0 / 3.0).abs() < 1e-12);
        assert!(holder_constant(&band, 2.0).is_err());
        assert!(holder_l(0.0).is_err());
    }

    #[test]
    fn increment_variance_examples() {
        let b = SpectralMeasure::band(DualDomain::RealTime, 0.0, PI, 1.0).unwrap();
        assert_eq!(increment_variance(&b, 2.0, 2.0), 0.0);
        assert!((increment_variance(&b, 1.0, 0.0) - 4.0 * PI).abs() < 1e-13);
    }
}

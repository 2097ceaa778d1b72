//! Constructive bounds on the gap probability, evaluated numerically.
//!
//! The upper-bound pipeline splits `ρ = m·1_J dλ + μ` with a narrow band
//! `J = (−π/k, π/k)` whose process is i.i.d. on the lattice `kℤ`, then
//! controls the slowly varying remainder `μ` through the variance of its
//! running average.

use crate::covariance::{covariance, holder_constant, increment_variance};
use crate::error::{Error, Result};
use crate::measure::{DualDomain, SpectralMeasure, SymmetricInterval};
use crate::normal::log_cdf;
use crate::persistence::{decay_fit, hole_sequential, small_ball_on_grid, small_ball_estimate, HoleEstimate};
use crate::rng::{derive_seed, pairwise_sum, SeedStream};
use crate::sampler::SampleGrid;
use crate::special::{sine_integral, sine_integral_minus_half_pi, sinc};
use gauss_quad::GaussLegendre;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};

/// Thresholds tried by [`assemble_upper_bound`]; the best exponent wins.
pub const Q_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

// ---------------------------------------------------------------------------
// lattice split

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Split {
    /// Offset in `[0, k)`.
    pub l: f64,
    pub lattice_average: f64,
    pub grid_mean: f64,
}

/// Smallest grid offset `l ∈ [0, k)` whose lattice average
/// `(k/N) Σ_j path(jk + l)` is below `q`.
///
/// `path` holds `N·points_per_unit` samples on `[0, N)`. The mean of the
/// lattice averages over all grid offsets equals the grid mean of the path,
/// so a split exists whenever the grid mean is below `q`; no continuity
/// slack is needed on the grid.
pub fn find_split(path: &[f64], points_per_unit: usize, k: u32, q: f64, n: u32) -> Result<Split> {
    if k == 0 || n == 0 || n % k != 0 {
        return Err(Error::InvalidArgument(format!("N = {n} must be a positive multiple of k = {k}")));
    }
    if points_per_unit == 0 || path.len() != n as usize * points_per_unit {
        return Err(Error::InvalidArgument(format!(
            "path has {} samples, expected N·resolution = {}",
            path.len(),
            n as usize * points_per_unit
        )));
    }
    let stride = k as usize * points_per_unit;
    let blocks = (n / k) as usize;
    let grid_mean = pairwise_sum(path) / path.len() as f64;
    for offset in 0..stride {
        let values: Vec<f64> = (0..blocks).map(|j| path[j * stride + offset]).collect();
        let avg = pairwise_sum(&values) / blocks as f64;
        if avg < q {
            return Ok(Split { l: offset as f64 / points_per_unit as f64, lattice_average: avg, grid_mean });
        }
    }
    Err(Error::NoSplitFound { q, grid_mean })
}

// ---------------------------------------------------------------------------
// i.i.d. positivity

/// `N·ln Φ(q/σ)`: log of the bound on `P(X_j + b_j > 0 ∀j)` for i.i.d.
/// `N(0, σ²)` variables and shifts with mean below `q`.
pub fn log_iid_positivity_bound(q: f64, sigma: f64, n: u32) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("σ must be positive, got {sigma}")));
    }
    Ok(f64::from(n) * log_cdf(q / sigma))
}

/// `e^{−C_q N}` with `C_q = −ln Φ(q/σ)`.
pub fn iid_positivity_bound(q: f64, sigma: f64, n: u32) -> Result<f64> {
    log_iid_positivity_bound(q, sigma, n).map(f64::exp)
}

/// `Σ ln Φ(b_j/σ)`.
pub fn log_product_positivity(b: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("σ must be positive, got {sigma}")));
    }
    let logs: Vec<f64> = b.iter().map(|x| log_cdf(x / sigma)).collect();
    Ok(pairwise_sum(&logs))
}

/// `Π Φ(b_j/σ)`, accumulated in log space.
pub fn product_positivity_exact(b: &[f64], sigma: f64) -> Result<f64> {
    log_product_positivity(b, sigma).map(f64::exp)
}

// ---------------------------------------------------------------------------
// Fejér variance

/// Variance of the running average `(1/N)∫_0^N g`, i.e.
/// `∫ sinc²(Nλ/2) dμ(λ)`.
pub fn fejer_variance(mu: &SpectralMeasure, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let half = 0.5 * f64::from(n);
    let mut total = 0.0;
    for b in mu.bands() {
        total += 2.0 * b.height * sinc_squared_integral(half, b.lo, b.hi);
    }
    for a in mu.atoms() {
        let s = sinc(half * a.lambda);
        total += a.symmetric_mass() * s * s;
    }
    if !mu.tabulated_parts().is_empty() {
        let gl = GaussLegendre::new(12).expect("valid quadrature degree");
        let width = PI / f64::from(n);
        for t in mu.tabulated_parts() {
            for (x0, x1, d0, d1) in t.cells() {
                let pieces = ((x1 - x0) / width).ceil().max(1.0) as usize;
                let h = (x1 - x0) / pieces as f64;
                let slope = (d1 - d0) / (x1 - x0);
                for i in 0..pieces {
                    let a = x0 + h * i as f64;
                    total += 2.0
                        * gl.integrate(a, a + h, |x| {
                            let s = sinc(half * x);
                            (d0 + slope * (x - x0)) * s * s
                        });
                }
            }
        }
    }
    Ok(total)
}

/// `∫_lo^hi sinc²(cλ) dλ = (1/c)[F(c·hi) − F(c·lo)]` with
/// `F(u) = Si(2u) − sin²u/u`.
fn sinc_squared_integral(c: f64, lo: f64, hi: f64) -> f64 {
    let (u0, u1) = (c * lo, c * hi);
    let tail = |u: f64| {
        let s = u.sin();
        if u == 0.0 {
            0.0
        } else {
            s * s / u
        }
    };
    let si_diff = if u0 > 1.0 {
        sine_integral_minus_half_pi(2.0 * u1) - sine_integral_minus_half_pi(2.0 * u0)
    } else {
        sine_integral(2.0 * u1) - sine_integral(2.0 * u0)
    };
    (si_diff - tail(u1) + tail(u0)) / c
}

/// The same variance from the time side,
/// `(2/N)∫_0^N (1 − t/N) r(t) dt`, by composite Gauss–Legendre.
pub fn fejer_variance_time_side(mu: &SpectralMeasure, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let nf = f64::from(n);
    let top = mu
        .bands()
        .iter()
        .map(|b| b.hi)
        .chain(mu.atoms().iter().map(|a| a.lambda))
        .chain(mu.tabulated_parts().iter().map(|t| t.last()))
        .fold(1.0, f64::max);
    let width = (PI / top).min(1.0);
    let pieces = (nf / width).ceil() as usize;
    let h = nf / pieces as f64;
    let gl = GaussLegendre::new(16).expect("valid quadrature degree");
    let parts: Vec<f64> = (0..pieces)
        .map(|i| {
            let a = h * i as f64;
            gl.integrate(a, a + h, |t| (1.0 - t / nf) * covariance(mu, t))
        })
        .collect();
    Ok(2.0 / nf * pairwise_sum(&parts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FejerConstant {
    #[serde(rename = "C0")]
    pub c0: f64,
    pub a: f64,
    #[serde(rename = "M_prime")]
    pub mprime: f64,
    /// `μ(|λ| ≥ a)`.
    pub outer_mass: f64,
}

impl FejerConstant {
    /// Upper bound on `N·σ_N²` from the kernel estimate
    /// `K_N(λ)/N ≤ min(1, π²/(Nλ)²)`, with `μ(I) ≤ M'|I|` inside `(−a, a)`.
    pub fn scaled_bound(&self, n: u32) -> f64 {
        let nf = f64::from(n);
        let (a, mp, out) = (self.a, self.mprime, self.outer_mass);
        if mp == 0.0 && out == 0.0 {
            return 0.0;
        }
        if nf * a >= PI {
            4.0 * PI * mp - 2.0 * PI * PI * mp / (nf * a) + PI * PI * out / (nf * a * a)
        } else {
            nf * (2.0 * a * mp + out)
        }
    }
}

/// `C₀` with `fejer_variance(μ, N) ≤ C₀/N` for every `N ≥ 1`.
///
/// For `N ≥ π/a` the bound is `4πM' + (π²/(Na))(μ_out/a − 2M')`, monotone in
/// `N`, so its supremum is at the smallest such `N` or in the limit `4πM'`.
/// Below `π/a` the trivial bound `σ² ≤ μ(ℝ)` is used.
pub fn fejer_constant(mu: &SpectralMeasure, a: f64, mprime: f64) -> Result<FejerConstant> {
    let reg = mu.verify_origin_regularity(a)?;
    if !reg.upper.is_finite() {
        return Err(Error::Hypothesis(format!("μ has an atom inside (−{a}, {a})")));
    }
    if reg.upper > mprime * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::Hypothesis(format!("density of μ reaches {} > M' = {mprime} near the origin", reg.upper)));
    }
    let inner: f64 = mu
        .pieces_with_breaks(&[a])
        .iter()
        .filter(|p| p.x1 <= a)
        .map(|p| 2.0 * p.mass())
        .sum();
    let outer_mass = (mu.total_mass() - inner).max(0.0);
    let mut fc = FejerConstant { c0: 0.0, a, mprime, outer_mass };
    if mu.is_zero() {
        return Ok(fc);
    }
    let threshold = (PI / a).ceil() as u32 + 1;
    let mut c0 = 4.0 * PI * mprime;
    for n in 1..=threshold.max(1) {
        c0 = c0.max(fc.scaled_bound(n));
    }
    fc.c0 = c0;
    Ok(fc)
}

// ---------------------------------------------------------------------------
// tail exponent

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub q: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    /// `q²/(2C₀)`.
    #[serde(rename = "C2")]
    pub c2: f64,
    /// First `N` where the prefactor `(1/q)√(C₀/(2πN))` is at most 1.
    #[serde(rename = "N0")]
    pub n0: u64,
}

impl TailBound {
    pub fn prefactor(&self, n: f64) -> f64 {
        (self.c0 / (2.0 * PI * n)).sqrt() / self.q
    }

    /// `ln` of the Gaussian tail bound on `P(average ≥ q)`.
    pub fn log_bound(&self, n: f64) -> f64 {
        self.prefactor(n).ln() - self.c2 * n
    }
}

pub fn tail_exponent(q: f64, c0: f64) -> Result<TailBound> {
    if !(q > 0.0 && c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidArgument(format!("need q > 0 and 0 < C0 < ∞, got q = {q}, C0 = {c0}")));
    }
    let n0 = (c0 / (2.0 * PI * q * q)).ceil().max(1.0) as u64;
    Ok(TailBound { q, c0, c2: q * q / (2.0 * c0), n0 })
}

// ---------------------------------------------------------------------------
// assembled upper bound

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvenanceStep {
    pub name: String,
    #[serde(with = "crate::report::float_or_inf")]
    pub value: f64,
    pub formula: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub q: f64,
    #[serde(rename = "C_q")]
    pub c_q: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2", with = "crate::report::float_or_inf")]
    pub c2: f64,
    #[serde(rename = "C", with = "crate::report::float_or_inf")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub a: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub upper: f64,
    pub k: u32,
    pub q: f64,
    pub sigma_s: f64,
    #[serde(rename = "C_q")]
    pub c_q: f64,
    #[serde(rename = "M_prime")]
    pub mprime: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2", with = "crate::report::float_or_inf")]
    pub c2: f64,
    /// `min(C₁, C₂)`: `H(N) ≤ 2e^{−CN}` for `N` a multiple of `k` past `N0`.
    pub assembled_upper: f64,
    #[serde(rename = "N0")]
    pub n0: u64,
    pub thresholds: Vec<ThresholdRow>,
    pub notes: Vec<ProvenanceStep>,
}

impl BoundReport {
    /// Exponent with the factor 2 of the union bound folded in:
    /// `H(N) ≤ e^{−(C − ln2/N)N}`.
    pub fn exponent_at(&self, n: f64) -> f64 {
        self.assembled_upper - LN_2 / n
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Run the upper-bound pipeline for `ρ` with `m|I| ≤ ρ(I) ≤ M|I|` on
/// `(−a, a)`.
pub fn assemble_upper_bound(rho: &SpectralMeasure, a: f64, m: f64, upper: f64) -> Result<BoundReport> {
    assemble_upper_bound_with(rho, a, m, upper, &Q_GRID)
}

pub fn assemble_upper_bound_with(
    rho: &SpectralMeasure,
    a: f64,
    m: f64,
    upper: f64,
    q_grid: &[f64],
) -> Result<BoundReport> {
    if !(m > 0.0 && upper.is_finite() && m <= upper) {
        return Err(Error::Hypothesis(format!("need 0 < m ≤ M < ∞, got m = {m}, M = {upper}")));
    }
    if q_grid.is_empty() || q_grid.iter().any(|q| !(*q > 0.0)) {
        return Err(Error::InvalidArgument("threshold grid must be nonempty and positive".into()));
    }
    let reg = rho.verify_origin_regularity(a)?;
    let tol = 1e-12;
    if reg.m < m * (1.0 - tol) || reg.upper > upper * (1.0 + tol) {
        return Err(Error::Hypothesis(format!(
            "measured (m, M) = ({}, {}) on (−{a}, {a}) does not satisfy the requested ({m}, {upper})",
            reg.m, reg.upper
        )));
    }
    let k = (PI / a * (1.0 - 1e-12)).ceil().max(1.0) as u32;
    let kf = f64::from(k);
    let (band, mu) = rho.decompose(m, SymmetricInterval::centred(PI / kf))?;
    let sigma_s = band.total_mass().sqrt();
    let mu_reg = mu.verify_origin_regularity(a)?;
    let mprime = mu_reg.upper;
    let fejer = fejer_constant(&mu, a, mprime)?;

    let mut rows = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let c_q = -log_cdf(q / sigma_s);
        let c1 = c_q / kf;
        let c2 = if fejer.c0 > 0.0 { tail_exponent(q, fejer.c0)?.c2 } else { f64::INFINITY };
        rows.push(ThresholdRow { q, c_q, c1, c2, c: c1.min(c2) });
    }
    let best = *rows
        .iter()
        .fold(None::<&ThresholdRow>, |acc, r| match acc {
            Some(b) if b.c >= r.c => Some(b),
            _ => Some(r),
        })
        .expect("nonempty grid");
    let n0 = if fejer.c0 > 0.0 { tail_exponent(best.q, fejer.c0)?.n0 } else { 1 };

    let step = |name: &str, value: f64, formula: &str| ProvenanceStep {
        name: name.to_string(),
        value,
        formula: formula.to_string(),
    };
    let notes = vec![
        step("k", kf, "ceil(pi / a)"),
        step("sigma_S^2", band.total_mass(), "2 * m * pi / k  (band m on (-pi/k, pi/k); i.i.d. on the lattice kZ)"),
        step("mu_total", mu.total_mass(), "total_mass(rho) - sigma_S^2"),
        step("M_prime", mprime, "sup density of mu on (-a, a)"),
        step("mu_outer", fejer.outer_mass, "mu(|lambda| >= a)"),
        step("C0", fejer.c0, "max over N of N * [mu(|l|<pi/N) + (pi/N)^2 (int_{pi/N<=|l|<a} M'/l^2 dl + mu_outer/a^2)]"),
        step("q", best.q, "argmax over the threshold grid of min(C1, C2)"),
        step("C_q", best.c_q, "-ln Phi(q / sigma_S)"),
        step("C1", best.c1, "C_q / k"),
        step("C2", best.c2, "q^2 / (2 C0)"),
        step("N0", n0 as f64, "ceil(C0 / (2 pi q^2)): tail prefactor (1/q) sqrt(C0/(2 pi N)) <= 1"),
        step("C", best.c, "min(C1, C2); H(N) <= e^{-C1 N} + e^{-C2 N} <= e^{-(C - ln 2 / N) N}"),
    ];
    Ok(BoundReport {
        a,
        m,
        upper,
        k,
        q: best.q,
        sigma_s,
        c_q: best.c_q,
        mprime,
        c0: fejer.c0,
        c1: best.c1,
        c2: best.c2,
        assembled_upper: best.c,
        n0,
        thresholds: rows,
        notes,
    })
}

// ---------------------------------------------------------------------------
// lower-bound factorization

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub n: f64,
    pub d: f64,
    pub grid_step: f64,
    pub a: f64,
    pub m: f64,
    pub hole: HoleEstimate,
    /// `P(S + (−d) > 0)` on the grid, `S` the band part.
    pub first_factor: HoleEstimate,
    /// `P(|g| ≤ d/2)` on the grid, `g` the remainder.
    pub second_factor: HoleEstimate,
    pub log_product: f64,
    pub joint_std_err: f64,
    /// `ln Ĥ ≥ ln(first·second) − 3·joint s.e.`
    pub holds: bool,
    /// `−ln(first factor)/N`.
    pub band_exponent: f64,
    /// `−ln(first·second)/N`, an empirical lower-bound exponent.
    pub lower_exponent: f64,
}

/// Check `H(N) ≥ P(S > d)·P(|g| ≤ d/2)` for `ρ = m·1_{(−a,a)} dλ + μ`.
///
/// The split is taken at `(−a, a)` directly; rescaling time so that
/// `a = π` changes neither event.
#[allow(clippy::too_many_arguments)]
pub fn lower_bound_factorization(
    rho: &SpectralMeasure,
    a: f64,
    m: f64,
    n: f64,
    d: f64,
    grid_step: f64,
    n_draws: usize,
    seed: u64,
) -> Result<FactorizationReport> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("d must be positive, got {d}")));
    }
    let (band, mu) = rho.decompose(m, SymmetricInterval::centred(a))?;
    let grid = SampleGrid::half_open(n, grid_step)?
        .ok_or_else(|| Error::InvalidArgument("empty grid".into()))?;
    let hole = hole_sequential(rho, n, grid_step, 0.0, n_draws, derive_seed(seed, 0))?;
    let first = hole_sequential(&band, n, grid_step, -d, n_draws, derive_seed(seed, 1))?;
    let second = small_ball_on_grid(&mu, 0.5 * d, n, &grid, n_draws, derive_seed(seed, 2))?;
    let log_product = first.log_h + second.log_h;
    let joint = (hole.std_err.powi(2) + first.std_err.powi(2) + second.std_err.powi(2)).sqrt();
    Ok(FactorizationReport {
        n,
        d,
        grid_step,
        a,
        m,
        holds: hole.log_h >= log_product - 3.0 * joint,
        band_exponent: -first.log_h / n,
        lower_exponent: -log_product / n,
        hole,
        first_factor: first,
        second_factor: second,
        log_product,
        joint_std_err: joint,
    })
}

// ---------------------------------------------------------------------------
// small-ball form

#[derive(Debug, Clone, Serialize)]
pub struct SmallBallReport {
    pub delta: f64,
    pub epsilon: f64,
    pub holder_constant: f64,
    pub pairs_checked: usize,
    pub holder_violations: usize,
    pub estimates: Vec<HoleEstimate>,
    /// Fitted `K̂` in `ln P ≈ −K̂ L + b`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub holds: bool,
}

/// Check the Hölder hypothesis on random pairs, then fit
/// `ln P(max |g| ≤ ε)` against interval length.
#[allow(clippy::too_many_arguments)]
pub fn small_ball_form_check(
    mu: &SpectralMeasure,
    delta: f64,
    epsilon: f64,
    lengths: &[f64],
    grid_step: f64,
    n_pairs: usize,
    n_draws: usize,
    seed: u64,
) -> Result<SmallBallReport> {
    if mu.domain() != DualDomain::RealTime {
        return Err(Error::InvalidArgument("small-ball check applies to real-time measures".into()));
    }
    let c = holder_constant(mu, delta)?;
    let span = lengths.iter().copied().fold(1.0, f64::max);
    let mut rng = SeedStream::new(seed).child(0).rng(0);
    let mut violations = 0;
    for _ in 0..n_pairs {
        let s: f64 = rng.random::<f64>() * span;
        let t: f64 = rng.random::<f64>() * span;
        let lhs = increment_variance(mu, s, t);
        let rhs = c * (t - s).abs().powf(delta);
        if lhs > rhs * (1.0 + 1e-9) + 1e-12 * mu.total_mass() {
            violations += 1;
        }
    }
    let estimates = lengths
        .iter()
        .enumerate()
        .map(|(i, &len)| small_ball_estimate(mu, epsilon, len, grid_step, n_draws, derive_seed(seed, 1 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let fit = decay_fit(&estimates)?;
    Ok(SmallBallReport {
        delta,
        epsilon,
        holder_constant: c,
        pairs_checked: n_pairs,
        holder_violations: violations,
        slope: fit.theta,
        slope_stderr: fit.theta_stderr,
        r_squared: fit.r_squared,
        holds: violations == 0 && fit.r_squared >= 0.9,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::cdf;

    #[test]
    fn split_on_constant_and_cosine_paths() {
        let zero = vec![0.0; 12];
        assert_eq!(find_split(&zero, 1, 3, 1.0, 12).unwrap().l, 0.0);
        let k = 4u32;
        let r = 8usize;
        let n = 4 * k;
        let path: Vec<f64> = (0..n as usize * r)
            .map(|i| (2.0 * PI * i as f64 / r as f64 / f64::from(k)).cos())
            .collect();
        let s = find_split(&path, r, k, 0.1, n).unwrap();
        assert!(s.lattice_average < 0.1);
        assert!(matches!(find_split(&vec![2.0; 12], 1, 3, 1.0, 12), Err(Error::NoSplitFound { .. })));
        assert!(find_split(&zero, 1, 5, 1.0, 12).is_err());
    }

    #[test]
    fn positivity_reference_values() {
        assert!((iid_positivity_bound(0.0, 1.0, 5).unwrap() - 1.0 / 32.0).abs() < 1e-15);
        assert!((iid_positivity_bound(1.0, 1.0, 10).unwrap() - cdf(1.0).powi(10)).abs() < 1e-14);
        assert!((product_positivity_exact(&[1.0], 1.0).unwrap() - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((product_positivity_exact(&[0.0; 6], 2.0).unwrap() - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn fejer_atoms() {
        let origin = SpectralMeasure::atom(DualDomain::RealTime, 0.0, 0.7).unwrap();
        for n in [1, 10, 1000] {
            assert!((fejer_variance(&origin, n).unwrap() - 0.7).abs() < 1e-15);
        }
        let pair = SpectralMeasure::atom(DualDomain::RealTime, 0.9, 0.5).unwrap();
        for n in [1u32, 7, 100] {
            let nf = f64::from(n);
            let s = (0.5 * nf * 0.9).sin() / (0.5 * nf * 0.9);
            let v = fejer_variance(&pair, n).unwrap();
            assert!((v - s * s).abs() < 1e-15);
            assert!(v <= PI * PI / (nf * nf * 0.81) + 1e-15);
        }
    }

    #[test]
    fn fejer_band_closed_form_matches_time_side() {
        let band = SpectralMeasure::band(DualDomain::RealTime, 0.5, 2.0, 0.8).unwrap();
        for n in [1u32, 10, 100] {
            let f = fejer_variance(&band, n).unwrap();
            let t = fejer_variance_time_side(&band, n).unwrap();
            assert!(((f - t) / t).abs() < 1e-8, "N={n}: {f} vs {t}");
        }
    }

    #[test]
    fn fejer_table_matches_band() {
        let band = SpectralMeasure::band(DualDomain::RealTime, 0.5, 2.0, 0.8).unwrap();
        let table = crate::measure::Tabulated::new(vec![0.5, 1.0, 2.0], vec![0.8, 0.8, 0.8]).unwrap();
        let tab = SpectralMeasure::tabulated(DualDomain::RealTime, table).unwrap();
        for n in [1u32, 50, 500] {
            let a = fejer_variance(&band, n).unwrap();
            let b = fejer_variance(&tab, n).unwrap();
            assert!(((a - b) / a).abs() < 1e-10);
        }
    }

    #[test]
    fn fejer_constant_cases() {
        let zero = SpectralMeasure::zero(DualDomain::RealTime);
        assert_eq!(fejer_constant(&zero, 1.0, 0.0).unwrap().c0, 0.0);
        let origin = SpectralMeasure::atom(DualDomain::RealTime, 0.0, 1.0).unwrap();
        assert!(matches!(fejer_constant(&origin, 1.0, 10.0), Err(Error::Hypothesis(_))));
        let a = 0.6;
        let band = SpectralMeasure::band(DualDomain::RealTime, a, 2.0 * a, 1.3).unwrap();
        let fc = fejer_constant(&band, a, 0.0).unwrap();
        assert!(fc.c0 > 0.0);
        for n in 1..=1000 {
            assert!(f64::from(n) * fejer_variance(&band, n).unwrap() <= fc.c0);
        }
    }

    #[test]
    fn tail_exponent_formula() {
        let t = tail_exponent(1.0, 1.0).unwrap();
        assert_eq!(t.c2, 0.5);
        assert_eq!(tail_exponent(2.0, 1.0).unwrap().c2, 2.0);
        assert!(t.prefactor(t.n0 as f64) <= 1.0);
        assert!(tail_exponent(0.0, 1.0).is_err());
    }

    #[test]
    fn sinc_pipeline() {
        let r = assemble_upper_bound(&SpectralMeasure::sinc(), PI, 1.0, 1.0).unwrap();
        assert_eq!(r.k, 1);
        assert!((r.sigma_s - (2.0 * PI).sqrt()).abs() < 1e-12);
        assert_eq!(r.c2, f64::INFINITY);
        assert_eq!(r.q, 0.25);
        assert!((r.assembled_upper + log_cdf(0.25 / (2.0 * PI).sqrt())).abs() < 1e-14);
        let json = r.to_json();
        assert!(json.contains("\"C2\": \"inf\""));
    }

    #[test]
    fn bound_grows_with_m() {
        let rho = SpectralMeasure::band(DualDomain::RealTime, 0.0, 2.0, 1.0).unwrap();
        let mut last = 0.0;
        for i in 1..=10 {
            let m = 0.1 * f64::from(i);
            let r = assemble_upper_bound(&rho, 1.0, m, 1.0).unwrap();
            assert!(r.assembled_upper > 0.0);
            assert!(r.assembled_upper >= last, "m = {m}");
            last = r.assembled_upper;
        }
    }

    #[test]
    fn bound_rejects_wrong_hypotheses() {
        let rho = SpectralMeasure::sinc();
        assert!(matches!(assemble_upper_bound(&rho, 1.0, 2.0, 2.0), Err(Error::Hypothesis(_))));
        assert!(matches!(assemble_upper_bound(&rho, 1.0, 0.0, 1.0), Err(Error::Hypothesis(_))));
    }
}

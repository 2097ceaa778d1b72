//! Self-check suites run by `gsp verify`.

use crate::bounds::{fejer_constant, fejer_variance, fejer_variance_time_side, find_split, lower_bound_factorization, small_ball_form_check};
use crate::covariance::covariance;
use crate::error::Result;
use crate::measure::{DualDomain, SpectralMeasure};
use crate::persistence::{hole_sequential, ordering_oracle};
use crate::rng::derive_seed;
use crate::sampler::{sample_cholesky, SampleGrid};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    LatticeIid,
    Ordering,
    Fejer,
    Split,
    LowerFactorization,
    SmallBall,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::LatticeIid,
        Suite::Ordering,
        Suite::Fejer,
        Suite::Split,
        Suite::LowerFactorization,
        Suite::SmallBall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LatticeIid => "lattice-iid",
            Suite::Ordering => "ordering",
            Suite::Fejer => "fejer",
            Suite::Split => "split",
            Suite::LowerFactorization => "lower-factorization",
            Suite::SmallBall => "small-ball",
        }
    }
}

/// Tolerances shared by the suites.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Multiples of the standard error allowed for Monte Carlo comparisons.
    pub sigma: f64,
    /// Relative tolerance for deterministic cross-representation checks.
    pub relative: f64,
    /// Absolute tolerance for values that vanish exactly.
    pub absolute: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { sigma: 3.0, relative: 1e-6, absolute: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub passed: bool,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    fn new(suite: Suite) -> Self {
        Self { suite: suite.name().to_string(), passed: true, checks: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.passed = false;
            self.failures.push(what());
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, tol: Tolerances) -> Result<SuiteOutcome> {
    let seed = derive_seed(seed, suite as u64);
    match suite {
        Suite::LatticeIid => lattice_iid(tol),
        Suite::Ordering => ordering(seed, tol),
        Suite::Fejer => fejer(tol),
        Suite::Split => split(seed),
        Suite::LowerFactorization => lower_factorization(seed),
        Suite::SmallBall => small_ball(seed),
    }
}

fn lattice_iid(tol: Tolerances) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::LatticeIid);
    for k in [1u32, 2, 4] {
        let kf = f64::from(k);
        let rho = SpectralMeasure::band(DualDomain::RealTime, 0.0, PI / kf, 1.0)?;
        for j in 1..=20 {
            let r = covariance(&rho, f64::from(j) * kf);
            out.check(r.abs() < tol.absolute, || format!("k={k} j={j}: r = {r:e}"));
        }
        // the lattice samples form a white sequence with the same variance
        let folded = rho.fold(k)?;
        for j in 0..=20 {
            let lhs = covariance(&folded, f64::from(j));
            let rhs = covariance(&rho, f64::from(j) * kf);
            out.check((lhs - rhs).abs() < 1e-10, || format!("fold k={k} j={j}: {lhs} vs {rhs}"));
        }
    }
    Ok(out)
}

fn ordering(seed: u64, tol: Tolerances) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::Ordering);
    let rho = SpectralMeasure::differenced_noise(4097)?;
    for n in 2..=6u32 {
        let exact = ordering_oracle(n)?.value;
        let est = hole_sequential(&rho, f64::from(n), 1.0, 0.0, 20_000, derive_seed(seed, u64::from(n)))?;
        let se = est.probability_std_err();
        let p = est.probability();
        out.check((p - exact).abs() <= tol.sigma * se, || format!("N={n}: {p:.6e} ± {se:.2e} vs {exact:.6e}"));
    }
    Ok(out)
}

fn fejer(tol: Tolerances) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::Fejer);
    let a = 0.5;
    let mu = SpectralMeasure::band(DualDomain::RealTime, 0.1, 2.5, 0.7)?;
    for n in [10u32, 100, 1000] {
        let f = fejer_variance(&mu, n)?;
        let t = fejer_variance_time_side(&mu, n)?;
        let rel = ((f - t) / t).abs();
        out.check(rel < tol.relative, || format!("N={n}: kernel side {f:e}, time side {t:e}"));
    }
    let c0 = fejer_constant(&mu, a, 0.7)?.c0;
    for n in 1..=1000u32 {
        let scaled = f64::from(n) * fejer_variance(&mu, n)?;
        out.check(scaled <= c0, || format!("N={n}: N·σ² = {scaled} > C0 = {c0}"));
    }
    Ok(out)
}

fn split(seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::Split);
    let (k, n, res, q) = (2u32, 16u32, 4usize, 1.0);
    let rho = SpectralMeasure::band(DualDomain::RealTime, 0.0, 0.5, 0.3)?;
    let grid = SampleGrid::new(0.0, 1.0 / res as f64, n as usize * res)?;
    let ens = sample_cholesky(&rho, grid, 100, seed)?;
    for (i, path) in ens.rows().enumerate() {
        let mean = path.iter().sum::<f64>() / path.len() as f64;
        if mean >= q {
            continue;
        }
        match find_split(path, res, k, q, n) {
            Ok(s) => {
                let stride = k as usize * res;
                let offset = (s.l * res as f64).round() as usize;
                let avg = (0..(n / k) as usize).map(|j| path[j * stride + offset]).sum::<f64>() / f64::from(n / k);
                out.check(avg < q && s.l < f64::from(k), || format!("path {i}: l = {} average {avg}", s.l));
            }
            Err(e) => out.check(false, || format!("path {i}: {e}")),
        }
    }
    Ok(out)
}

/// Band of height 1 on `(−π, π)` plus a small band on `π/2 ≤ |λ| ≤ π`.
pub fn perturbed_sinc() -> SpectralMeasure {
    SpectralMeasure::sinc()
        .add(&SpectralMeasure::band(DualDomain::RealTime, 0.5 * PI, PI, 0.2).expect("valid band"))
        .expect("same domain")
}

fn lower_factorization(seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::LowerFactorization);
    let rho = perturbed_sinc();
    let r = lower_bound_factorization(&rho, PI, 1.0, 8.0, 1.0, 0.25, 20_000, seed)?;
    out.check(r.holds, || {
        format!("ln Ĥ = {} < ln(first·second) = {} − 3·{}", r.hole.log_h, r.log_product, r.joint_std_err)
    });
    Ok(out)
}

fn small_ball(seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::SmallBall);
    let mu = SpectralMeasure::band(DualDomain::RealTime, 0.0, 1.0, 0.5)?;
    let r = small_ball_form_check(&mu, 1.0, 0.5, &[5.0, 10.0, 20.0], 0.5, 1000, 20_000, seed)?;
    out.check(r.holder_violations == 0, || format!("{} Hölder violations", r.holder_violations));
    out.check(r.r_squared >= 0.9, || format!("r² = {}", r.r_squared));
    Ok(out)
}

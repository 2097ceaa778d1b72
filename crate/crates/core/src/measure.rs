//! Symmetric finite spectral measures on `[-π, π]` (integer time) or `ℝ`
//! (real time).
//!
//! Only the `λ ≥ 0` half is stored; every band, atom and tabulated segment
//! stands for itself together with its mirror image. An atom at the origin
//! is its own mirror and is counted once.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Support tolerance for integer-time measures; data within this distance
/// past π is clamped onto π.
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualDomain {
    /// Processes on ℤ; the dual is `[-π, π]`.
    #[serde(rename = "integer")]
    IntegerTime,
    /// Processes on ℝ; the dual is ℝ.
    #[serde(rename = "real")]
    RealTime,
}

impl DualDomain {
    /// Right end of the stored half-line.
    pub fn upper_limit(self) -> f64 {
        match self {
            DualDomain::IntegerTime => PI,
            DualDomain::RealTime => f64::INFINITY,
        }
    }
}

/// Uniform density `height` on `[lo, hi] ∪ [-hi, -lo]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64, height: f64) -> Self {
        Self { lo, hi, height }
    }

    fn overlap(&self, p: f64, q: f64) -> f64 {
        (self.hi.min(q) - self.lo.max(p)).max(0.0)
    }
}

/// Point mass `mass` at `±lambda` (a single point mass when `lambda == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: f64,
    pub mass: f64,
}

impl Atom {
    pub fn new(lambda: f64, mass: f64) -> Self {
        Self { lambda, mass }
    }

    /// Mass of the atom together with its mirror.
    pub fn symmetric_mass(&self) -> f64 {
        if self.lambda == 0.0 {
            self.mass
        } else {
            2.0 * self.mass
        }
    }
}

/// Piecewise-linear density on a strictly increasing grid of `λ ≥ 0`,
/// zero outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub lambda: Vec<f64>,
    pub density: Vec<f64>,
}

impl Tabulated {
    pub fn new(lambda: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let t = Self { lambda, density };
        t.validate()?;
        Ok(t)
    }

    /// Tabulate `f` at `n` equally spaced nodes on `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMeasure("tabulation needs at least two nodes".into()));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let lambda: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
            .collect();
        let density = lambda.iter().map(|&x| f(x)).collect();
        Self::new(lambda, density)
    }

    fn validate(&self) -> Result<()> {
        if self.lambda.len() != self.density.len() {
            return Err(Error::InvalidMeasure(format!(
                "tabulated lambda has {} entries but density has {}",
                self.lambda.len(),
                self.density.len()
            )));
        }
        if self.lambda.len() < 2 {
            return Err(Error::InvalidMeasure("tabulated density needs at least two nodes".into()));
        }
        if self.lambda[0] < 0.0 {
            return Err(Error::InvalidMeasure("tabulated grid must start at lambda >= 0".into()));
        }
        for (i, w) in self.lambda.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "tabulated grid not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        if let Some(i) = self.density.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "tabulated density at index {i} is negative or not finite"
            )));
        }
        Ok(())
    }

    pub fn first(&self) -> f64 {
        self.lambda[0]
    }

    pub fn last(&self) -> f64 {
        *self.lambda.last().unwrap()
    }

    /// Linear interpolant at `x`; zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.first() || x > self.last() {
            return 0.0;
        }
        let i = self.lambda.partition_point(|&v| v <= x).clamp(1, self.lambda.len() - 1);
        let (x0, x1) = (self.lambda[i - 1], self.lambda[i]);
        let (d0, d1) = (self.density[i - 1], self.density[i]);
        d0 + (d1 - d0) * (x - x0) / (x1 - x0)
    }

    /// Trapezoid integral over the whole grid (one side only).
    pub fn half_mass(&self) -> f64 {
        self.cells().map(|(x0, x1, d0, d1)| 0.5 * (d0 + d1) * (x1 - x0)).sum()
    }

    pub(crate) fn cells(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.lambda
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| (x[0], x[1], d[0], d[1]))
    }

    /// The part of the table inside `[p, q]`, with interpolated end nodes.
    pub fn restrict(&self, p: f64, q: f64) -> Option<Tabulated> {
        let lo = p.max(self.first());
        let hi = q.min(self.last());
        if !(hi > lo) {
            return None;
        }
        let mut lambda = vec![lo];
        let mut density = vec![self.eval(lo)];
        for (&x, &d) in self.lambda.iter().zip(&self.density) {
            if x > lo && x < hi {
                lambda.push(x);
                density.push(d);
            }
        }
        lambda.push(hi);
        density.push(self.eval(hi));
        Some(Tabulated { lambda, density })
    }
}

/// Linear density on `[x0, x1]` going from `d0` to `d1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub x0: f64,
    pub x1: f64,
    pub d0: f64,
    pub d1: f64,
}

impl Piece {
    pub fn mass(&self) -> f64 {
        0.5 * (self.d0 + self.d1) * (self.x1 - self.x0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.d0 + (self.d1 - self.d0) * (x - self.x0) / (self.x1 - self.x0)
    }
}

/// Symmetric interval pair `[lo, hi] ∪ [-hi, -lo]` with `0 ≤ lo < hi`;
/// `lo == 0` is the centred interval `(-hi, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SymmetricInterval {
    pub fn centred(half_width: f64) -> Self {
        Self { lo: 0.0, hi: half_width }
    }

    pub fn pair(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Tightest `(m, M)` with `m|I| ≤ ρ(I) ≤ M|I|` for every `I ⊂ (-a, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginRegularity {
    pub a: f64,
    /// Lower density bound `m`.
    pub m: f64,
    /// Upper density bound `M`, infinite when an atom sits in the window.
    #[serde(rename = "M", with = "crate::report::float_or_inf")]
    pub upper: f64,
}

impl OriginRegularity {
    pub fn lower_bound_holds(&self) -> bool {
        self.m > 0.0
    }

    pub fn two_sided_bound_holds(&self) -> bool {
        self.m > 0.0 && self.upper.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    domain: DualDomain,
    bands: Vec<Band>,
    atoms: Vec<Atom>,
    tabulated: Vec<Tabulated>,
}

/// JSON form of a process specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub domain: DualDomain,
    #[serde(default)]
    pub bands: Vec<Band>,
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulated: Option<TabulatedField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TabulatedField {
    One(Tabulated),
    Many(Vec<Tabulated>),
}

impl SpectralMeasure {
    /// Validates and normalizes the parts; zero-height bands and zero-mass
    /// atoms are dropped. The zero measure is allowed here (it is a valid
    /// summand); [`SpectralMeasure::from_spec`] additionally requires
    /// positive total mass.
    pub fn new(
        domain: DualDomain,
        bands: Vec<Band>,
        atoms: Vec<Atom>,
        tabulated: Vec<Tabulated>,
    ) -> Result<Self> {
        let limit = domain.upper_limit();
        let clamp = |x: f64| if x > limit && x <= limit + SUPPORT_TOL { limit } else { x };
        let mut out_bands = Vec::with_capacity(bands.len());
        for (i, b) in bands.into_iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.height.is_finite()) {
                return Err(Error::InvalidMeasure(format!("band {i} has non-finite fields")));
            }
            let b = Band::new(b.lo, clamp(b.hi), b.height);
            if b.lo < 0.0 || !(b.lo < b.hi) {
                return Err(Error::InvalidMeasure(format!(
                    "band {i} must satisfy 0 <= lo < hi, got [{}, {}]",
                    b.lo, b.hi
                )));
            }
            if b.hi > limit {
                return Err(Error::InvalidMeasure(format!("band {i} extends past pi")));
            }
            if b.height < 0.0 {
                return Err(Error::InvalidMeasure(format!("band {i} has negative height")));
            }
            if b.height > 0.0 {
                out_bands.push(b);
            }
        }
        let mut out_atoms: Vec<Atom> = Vec::with_capacity(atoms.len());
        for (i, a) in atoms.into_iter().enumerate() {
            if !(a.lambda.is_finite() && a.mass.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom {i} has non-finite fields")));
            }
            let a = Atom::new(clamp(a.lambda), a.mass);
            if a.lambda < 0.0 || a.lambda > limit {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} location {} outside [0, {limit}]",
                    a.lambda
                )));
            }
            if a.mass < 0.0 {
                return Err(Error::InvalidMeasure(format!("atom {i} has negative mass")));
            }
            if a.mass > 0.0 {
                match out_atoms.iter_mut().find(|x| x.lambda == a.lambda) {
                    Some(x) => x.mass += a.mass,
                    None => out_atoms.push(a),
                }
            }
        }
        out_atoms.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
        let mut out_tabs = Vec::with_capacity(tabulated.len());
        for mut t in tabulated {
            t.validate()?;
            if let Some(last) = t.lambda.last_mut() {
                *last = clamp(*last);
            }
            t.validate()?;
            if t.last() > limit {
                return Err(Error::InvalidMeasure("tabulated grid extends past pi".into()));
            }
            if t.density.iter().any(|&d| d > 0.0) {
                out_tabs.push(t);
            }
        }
        Ok(Self { domain, bands: out_bands, atoms: out_atoms, tabulated: out_tabs })
    }

    pub fn zero(domain: DualDomain) -> Self {
        Self { domain, bands: vec![], atoms: vec![], tabulated: vec![] }
    }

    /// Single band `[lo, hi]` of the given height.
    pub fn band(domain: DualDomain, lo: f64, hi: f64, height: f64) -> Result<Self> {
        Self::new(domain, vec![Band::new(lo, hi, height)], vec![], vec![])
    }

    /// Single atom pair at `±lambda`, `mass` on each side.
    pub fn atom(domain: DualDomain, lambda: f64, mass: f64) -> Result<Self> {
        Self::new(domain, vec![], vec![Atom::new(lambda, mass)], vec![])
    }

    pub fn tabulated(domain: DualDomain, table: Tabulated) -> Result<Self> {
        Self::new(domain, vec![], vec![], vec![table])
    }

    /// Uniform density of height 1 on `[-π, π]` in real time: the sinc
    /// process with `r(t) = 2 sin(πt)/t`.
    pub fn sinc() -> Self {
        Self::band(DualDomain::RealTime, 0.0, PI, 1.0).expect("valid band")
    }

    /// Spectral density `2(1 - cos λ)` of `Y_j - Y_{j-1}` for i.i.d.
    /// standard Gaussian `Y`, tabulated on `[0, π]`.
    pub fn differenced_noise(nodes: usize) -> Result<Self> {
        let t = Tabulated::from_fn(0.0, PI, nodes, |x| 2.0 * (1.0 - x.cos()))?;
        Self::tabulated(DualDomain::IntegerTime, t)
    }

    pub fn domain(&self) -> DualDomain {
        self.domain
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn tabulated_parts(&self) -> &[Tabulated] {
        &self.tabulated
    }

    pub fn is_zero(&self) -> bool {
        self.bands.is_empty() && self.atoms.is_empty() && self.tabulated.is_empty()
    }

    /// Sum of two measures on the same domain.
    pub fn add(&self, other: &SpectralMeasure) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::InvalidArgument("cannot add measures on different domains".into()));
        }
        let mut bands = self.bands.clone();
        bands.extend_from_slice(&other.bands);
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let mut tabs = self.tabulated.clone();
        tabs.extend(other.tabulated.iter().cloned());
        Self::new(self.domain, bands, atoms, tabs)
    }

    // ---- JSON ----

    pub fn from_spec(spec: ProcessSpec) -> Result<Self> {
        let tabs = match spec.tabulated {
            None => vec![],
            Some(TabulatedField::One(t)) => vec![t],
            Some(TabulatedField::Many(ts)) => ts,
        };
        let rho = Self::new(spec.domain, spec.bands, spec.atoms, tabs)?;
        let mass = rho.total_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMeasure(format!("total mass must be finite and positive, got {mass}")));
        }
        Ok(rho)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProcessSpec = serde_json::from_str(text)?;
        Self::from_spec(spec)
    }

    pub fn to_spec(&self) -> ProcessSpec {
        let tabulated = match self.tabulated.len() {
            0 => None,
            1 => Some(TabulatedField::One(self.tabulated[0].clone())),
            _ => Some(TabulatedField::Many(self.tabulated.clone())),
        };
        ProcessSpec { domain: self.domain, bands: self.bands.clone(), atoms: self.atoms.clone(), tabulated }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("measure serializes")
    }

    // ---- basic functionals ----

    /// `ρ(T*)`.
    pub fn total_mass(&self) -> f64 {
        let bands: f64 = self.bands.iter().map(|b| 2.0 * b.height * (b.hi - b.lo)).sum();
        let atoms: f64 = self.atoms.iter().map(Atom::symmetric_mass).sum();
        let tabs: f64 = self.tabulated.iter().map(|t| 2.0 * t.half_mass()).sum();
        bands + atoms + tabs
    }

    /// `∫ |λ|^δ dρ(λ)`. Returns `+inf` rather than failing when the moment
    /// overflows.
    pub fn moment(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("moment order must be positive, got {delta}")));
        }
        let p1 = delta + 1.0;
        let p2 = delta + 2.0;
        let mut total = 0.0;
        for b in &self.bands {
            total += 2.0 * b.height * (b.hi.powf(p1) - b.lo.powf(p1)) / p1;
        }
        for a in &self.atoms {
            if a.lambda > 0.0 {
                total += 2.0 * a.mass * a.lambda.powf(delta);
            }
        }
        for t in &self.tabulated {
            for (x0, x1, d0, d1) in t.cells() {
                // density d0 + s(λ - x0) = (d0 - s x0) + s λ
                let s = (d1 - d0) / (x1 - x0);
                let i0 = (x1.powf(p1) - x0.powf(p1)) / p1;
                let i1 = (x1.powf(p2) - x0.powf(p2)) / p2;
                total += 2.0 * ((d0 - s * x0) * i0 + s * i1);
            }
        }
        Ok(total)
    }

    /// Density of the absolutely continuous part at `λ` (even in `λ`).
    pub fn density_at(&self, lambda: f64) -> f64 {
        let x = lambda.abs();
        let bands: f64 = self.bands.iter().filter(|b| b.lo <= x && x <= b.hi).map(|b| b.height).sum();
        let tabs: f64 = self.tabulated.iter().map(|t| t.eval(x)).sum();
        bands + tabs
    }

    /// `ρ([lo, hi])`, atoms counted on the closed interval.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("interval [{lo}, {hi}] is reversed")));
        }
        if self.domain == DualDomain::IntegerTime && (lo < -PI - SUPPORT_TOL || hi > PI + SUPPORT_TOL) {
            return Err(Error::OutsideDomain { lo, hi });
        }
        let mut total = 0.0;
        // positive half
        if hi >= 0.0 {
            total += self.half_line_mass(lo.max(0.0), hi);
        }
        // negative half, reflected
        if lo < 0.0 {
            total += self.half_line_mass((-hi).max(0.0), -lo);
        }
        // both halves picked up the origin atom
        if lo < 0.0 && hi >= 0.0 {
            if let Some(a) = self.atoms.iter().find(|a| a.lambda == 0.0) {
                total -= a.mass;
            }
        }
        Ok(total)
    }

    /// Mass of the stored half restricted to `[p, q] ⊂ [0, ∞)`, one side only.
    fn half_line_mass(&self, p: f64, q: f64) -> f64 {
        let bands: f64 = self.bands.iter().map(|b| b.height * b.overlap(p, q)).sum();
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.lambda >= p && a.lambda <= q)
            .map(|a| a.mass)
            .sum();
        let tabs: f64 = self
            .tabulated
            .iter()
            .filter_map(|t| t.restrict(p, q))
            .map(|t| t.half_mass())
            .sum();
        bands + atoms + tabs
    }

    // ---- density pieces ----

    /// Linear density pieces of the continuous part over the union of all
    /// breakpoints and `extra`, including zero-density gaps between them.
    pub(crate) fn pieces_with_breaks(&self, extra: &[f64]) -> Vec<Piece> {
        let mut breaks: Vec<f64> = extra.to_vec();
        for b in &self.bands {
            breaks.push(b.lo);
            breaks.push(b.hi);
        }
        for t in &self.tabulated {
            breaks.extend_from_slice(&t.lambda);
        }
        breaks.retain(|x| x.is_finite());
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut pieces = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let mid = 0.5 * (x0 + x1);
            let band: f64 = self.bands.iter().filter(|b| b.lo <= mid && mid <= b.hi).map(|b| b.height).sum();
            let mut d0 = band;
            let mut d1 = band;
            for t in &self.tabulated {
                if t.first() <= mid && mid <= t.last() {
                    d0 += t.eval(x0);
                    d1 += t.eval(x1);
                }
            }
            pieces.push(Piece { x0, x1, d0, d1 });
        }
        pieces
    }

    /// Nonzero continuous pieces, on the stored half line.
    pub(crate) fn density_pieces(&self) -> Vec<Piece> {
        self.pieces_with_breaks(&[])
            .into_iter()
            .filter(|p| p.d0 > 0.0 || p.d1 > 0.0)
            .collect()
    }

    // ---- origin regularity ----

    /// Tightest `(m, M)` on `(-a, a)`.
    ///
    /// Bands and tabulated segments are piecewise linear, so the essential
    /// infimum and supremum are attained at breakpoints; every breakpoint in
    /// `[0, a]` (band edges and all table nodes) is swept. Any atom in
    /// `[0, a)` makes `M` infinite; uncovered gaps force `m = 0`.
    pub fn verify_origin_regularity(&self, a: f64) -> Result<OriginRegularity> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("window half-width must be positive, got {a}")));
        }
        if self.domain == DualDomain::IntegerTime && a > PI + SUPPORT_TOL {
            return Err(Error::OutsideDomain { lo: -a, hi: a });
        }
        let (m, mut upper) = self.density_range(0.0, a);
        if self.atoms.iter().any(|at| at.lambda < a) {
            upper = f64::INFINITY;
        }
        Ok(OriginRegularity { a, m, upper })
    }

    /// Essential infimum and supremum of the density on `(p, q)`.
    fn density_range(&self, p: f64, q: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for piece in self.pieces_with_breaks(&[p, q]) {
            if piece.x0 >= p && piece.x1 <= q && piece.x1 > piece.x0 {
                lo = lo.min(piece.d0.min(piece.d1));
                hi = hi.max(piece.d0.max(piece.d1));
            }
        }
        if lo == f64::INFINITY {
            lo = 0.0;
        }
        (lo, hi)
    }

    // ---- decomposition ----

    /// Split `ρ = m·1_J dλ + μ`, returning `(band part, μ)`.
    pub fn decompose(&self, m: f64, j: SymmetricInterval) -> Result<(SpectralMeasure, SpectralMeasure)> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("split height must be nonnegative, got {m}")));
        }
        if !(j.lo >= 0.0 && j.lo < j.hi) || j.hi > self.domain.upper_limit() + SUPPORT_TOL {
            return Err(Error::InvalidArgument(format!("bad split interval [{}, {}]", j.lo, j.hi)));
        }
        if m == 0.0 {
            return Ok((Self::zero(self.domain), self.clone()));
        }
        let jhi = j.hi.min(self.domain.upper_limit());
        let (infimum, _) = self.density_range(j.lo, jhi);
        let tol = 1e-12 * m.max(1.0);
        if infimum < m - tol {
            return Err(Error::NonNegativityViolation { m, infimum });
        }

        let mut bands = Vec::new();
        for b in &self.bands {
            if b.lo < j.lo {
                bands.push(Band::new(b.lo, b.hi.min(j.lo), b.height));
            }
            if b.hi > jhi {
                bands.push(Band::new(b.lo.max(jhi), b.hi, b.height));
            }
        }
        let mut tabs = Vec::new();
        for t in &self.tabulated {
            tabs.extend(t.restrict(0.0, j.lo));
            tabs.extend(t.restrict(jhi, f64::INFINITY));
        }

        // inside J: subtract m from the band density first, then from the table
        let mut inner_tabs: Vec<Piece> = Vec::new();
        for piece in self.pieces_with_breaks(&[j.lo, jhi]) {
            if piece.x0 < j.lo || piece.x1 > jhi {
                continue;
            }
            let mid = 0.5 * (piece.x0 + piece.x1);
            let band: f64 = self.bands.iter().filter(|b| b.lo <= mid && mid <= b.hi).map(|b| b.height).sum();
            let tab0 = piece.d0 - band;
            let tab1 = piece.d1 - band;
            let covered = self.tabulated.iter().any(|t| t.first() <= mid && mid <= t.last());
            if band >= m {
                if band > m {
                    bands.push(Band::new(piece.x0, piece.x1, band - m));
                }
                if covered {
                    inner_tabs.push(Piece { x0: piece.x0, x1: piece.x1, d0: tab0, d1: tab1 });
                }
            } else {
                let short = m - band;
                inner_tabs.push(Piece {
                    x0: piece.x0,
                    x1: piece.x1,
                    d0: (tab0 - short).max(0.0),
                    d1: (tab1 - short).max(0.0),
                });
            }
        }
        tabs.extend(merge_pieces(&inner_tabs));
        bands.retain(|b| b.hi > b.lo);
        bands.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        let part = Self::new(self.domain, vec![Band::new(j.lo, jhi, m)], vec![], vec![])?;
        let rest = Self::new(self.domain, bands, self.atoms.clone(), tabs)?;
        Ok((part, rest))
    }

    // ---- scaling and folding ----

    /// Spectral measure of `t ↦ f(αt)`: support stretched by `α`, density
    /// divided by `α`, masses preserved.
    pub fn scale(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor must be positive, got {alpha}")));
        }
        if self.domain != DualDomain::RealTime {
            return Err(Error::InvalidArgument("scaling is defined for real-time measures".into()));
        }
        Ok(self.scaled_unchecked(alpha))
    }

    fn scaled_unchecked(&self, alpha: f64) -> Self {
        if alpha == 1.0 {
            return self.clone();
        }
        let bands = self.bands.iter().map(|b| Band::new(alpha * b.lo, alpha * b.hi, b.height / alpha)).collect();
        let atoms = self.atoms.iter().map(|a| Atom::new(alpha * a.lambda, a.mass)).collect();
        let tabulated = self
            .tabulated
            .iter()
            .map(|t| Tabulated {
                lambda: t.lambda.iter().map(|x| alpha * x).collect(),
                density: t.density.iter().map(|d| d / alpha).collect(),
            })
            .collect();
        Self { domain: DualDomain::RealTime, bands, atoms, tabulated }
    }

    /// Spectral measure of the integer-time sequence `j ↦ f(kj)`.
    pub fn fold(&self, k: u32) -> Result<Self> {
        self.fold_truncated(k, f64::INFINITY)
    }

    /// [`SpectralMeasure::fold`] with tabulated parts truncated at
    /// `|λ| ≤ lambda_max` (measured before scaling). Tables are finite, so
    /// the default of no truncation discards nothing.
    pub fn fold_truncated(&self, k: u32, lambda_max: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("fold factor must be positive".into()));
        }
        if self.domain == DualDomain::IntegerTime && k == 1 {
            return Ok(self.clone());
        }
        let kf = f64::from(k);
        let mut truncated = self.clone();
        truncated.domain = DualDomain::RealTime;
        if lambda_max.is_finite() {
            truncated.tabulated = self.tabulated.iter().filter_map(|t| t.restrict(0.0, lambda_max)).collect();
        }
        let scaled = truncated.scaled_unchecked(kf);

        let mut bands = Vec::new();
        for b in &scaled.bands {
            for (p, q) in split_at_pi_multiples(b.lo, b.hi) {
                let (u, v, _) = reduce_segment(p, q);
                bands.push(Band::new(u, v, b.height));
            }
        }
        let mut atoms: Vec<Atom> = Vec::new();
        for a in &scaled.atoms {
            let x = reduce_point(a.lambda);
            // both mirrors land on the origin when λ ≡ 0 mod 2π
            let mass = if x == 0.0 && a.lambda != 0.0 { 2.0 * a.mass } else { a.mass };
            atoms.push(Atom::new(x, mass));
        }
        let mut tabs = Vec::new();
        for t in &scaled.tabulated {
            for (p, q) in split_at_pi_multiples(t.first(), t.last()) {
                let Some(seg) = t.restrict(p, q) else { continue };
                let (_, _, shift_reflect) = reduce_segment(p, q);
                let (shift, reflect) = shift_reflect;
                let mut lambda: Vec<f64> = seg.lambda.iter().map(|x| x - shift).collect();
                let mut density = seg.density.clone();
                if reflect {
                    lambda = lambda.iter().map(|x| -x).collect();
                    lambda.reverse();
                    density.reverse();
                }
                for x in lambda.iter_mut() {
                    *x = x.clamp(0.0, PI);
                }
                if lambda.windows(2).all(|w| w[1] > w[0]) {
                    tabs.push(Tabulated { lambda, density });
                }
            }
        }
        Self::new(DualDomain::IntegerTime, bands, atoms, tabs)
    }
}

/// Merge consecutive linear pieces into tables where they join continuously.
fn merge_pieces(pieces: &[Piece]) -> Vec<Tabulated> {
    let mut out: Vec<Tabulated> = Vec::new();
    for p in pieces {
        if let Some(cur) = out.last_mut() {
            if cur.last() == p.x0 && *cur.density.last().unwrap() == p.d0 {
                cur.lambda.push(p.x1);
                cur.density.push(p.d1);
                continue;
            }
        }
        out.push(Tabulated { lambda: vec![p.x0, p.x1], density: vec![p.d0, p.d1] });
    }
    out.retain(|t| t.density.iter().any(|&d| d > 0.0));
    out
}

/// Split `[p, q]` at every multiple of π inside it.
fn split_at_pi_multiples(p: f64, q: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = p;
    let mut n = (p / PI).floor() + 1.0;
    while n * PI < q {
        let cut = n * PI;
        if cut > start {
            out.push((start, cut));
        }
        start = cut;
        n += 1.0;
    }
    if q > start {
        out.push((start, q));
    }
    out
}

/// Image of a segment lying between consecutive multiples of π under
/// `λ ↦ |λ mod 2π|` (reduced to `[-π, π]`). Returns the image endpoints and
/// the `(shift, reflected)` pair describing the map.
fn reduce_segment(p: f64, q: f64) -> (f64, f64, (f64, bool)) {
    let mid = 0.5 * (p + q);
    let n = (mid / (2.0 * PI)).round();
    let shift = 2.0 * PI * n;
    let (u, v) = (p - shift, q - shift);
    if mid - shift < 0.0 {
        ((-v).clamp(0.0, PI), (-u).clamp(0.0, PI), (shift, true))
    } else {
        (u.clamp(0.0, PI), v.clamp(0.0, PI), (shift, false))
    }
}

fn reduce_point(x: f64) -> f64 {
    let n = (x / (2.0 * PI)).round();
    let r = (x - 2.0 * PI * n).abs();
    if r < 1e-12 {
        0.0
    } else if r > PI - 1e-12 {
        PI
    } else {
        r
    }
}

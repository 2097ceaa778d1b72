//! Standard normal distribution helpers that stay accurate in the tails.
//!
//! Everything here works with the upper tail `Q(x) = P(Z > x)` whenever the
//! lower tail would lose precision, and switches to log space before values
//! underflow.

use rand::Rng;
use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Beyond this point `Q(x)` is evaluated asymptotically and truncated draws
/// use tail rejection instead of inverse-CDF.
const DEEP_TAIL: f64 = 30.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Upper tail probability `P(Z > x)`.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
pub fn cdf(x: f64) -> f64 {
    upper_tail(-x)
}

/// `ln P(Z > x)`, finite for every finite `x`.
pub fn log_upper_tail(x: f64) -> f64 {
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x < 0.0 {
        return (-upper_tail(-x)).ln_1p();
    }
    if x < DEEP_TAIL {
        return upper_tail(x).ln();
    }
    // Mills-ratio expansion; the first omitted term is O(x^-12).
    let x2 = x * x;
    let inv = 1.0 / x2;
    let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv * (1.0 - 9.0 * inv))));
    -0.5 * x2 - x.ln() - LN_SQRT_2PI + series.ln()
}

/// `ln Φ(x)`.
pub fn log_cdf(x: f64) -> f64 {
    log_upper_tail(-x)
}

/// Inverse of the upper tail: returns `x` with `P(Z > x) = q`.
pub fn upper_tail_inverse(q: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * q)
}

/// `ln P(lo < Z < hi)`; `-inf` for empty intervals.
pub fn log_interval_prob(lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return f64::NEG_INFINITY;
    }
    if lo >= 0.0 {
        let a = log_upper_tail(lo);
        let b = log_upper_tail(hi);
        if b == f64::NEG_INFINITY {
            return a;
        }
        return a + (-(b - a).exp()).ln_1p();
    }
    if hi <= 0.0 {
        return log_interval_prob(-hi, -lo);
    }
    // straddles zero: 1 - Q(hi) - Q(-lo)
    (-(upper_tail(hi) + upper_tail(-lo))).ln_1p()
}

/// `E[Z | lo < Z < hi]`, stable in either tail.
pub fn truncated_mean(lo: f64, hi: f64) -> f64 {
    if hi <= 0.0 {
        return -truncated_mean(-hi, -lo);
    }
    let log_p = log_interval_prob(lo, hi);
    let ratio = |x: f64| {
        if x.is_finite() {
            (-0.5 * x * x - LN_SQRT_2PI - log_p).exp()
        } else {
            0.0
        }
    };
    (ratio(lo) - ratio(hi)).clamp(lo, hi)
}

/// Draw from the standard normal restricted to `(lo, hi)`.
///
/// Inverse-CDF on whichever tail keeps the target probability small, with
/// exact rejection from the Rayleigh tail once `lo` exceeds `DEEP_TAIL`.
/// The interval must have positive probability.
pub fn sample_truncated<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    if lo >= 0.0 {
        return sample_upper(rng, lo, hi);
    }
    if hi <= 0.0 {
        return -sample_upper(rng, -hi, -lo);
    }
    let u: f64 = open01(rng);
    let q_hi = upper_tail(hi);
    let q_neg_lo = upper_tail(-lo);
    let mass = 1.0 - q_hi - q_neg_lo;
    // Φ(lo) + u·mass, expressed through whichever tail is smaller.
    let p = q_neg_lo + u * mass;
    let x = if p < 0.5 {
        -upper_tail_inverse(p)
    } else {
        upper_tail_inverse(q_hi + (1.0 - u) * mass)
    };
    x.clamp(lo, hi)
}

fn sample_upper<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo < DEEP_TAIL {
        let q_lo = upper_tail(lo);
        let q_hi = upper_tail(hi);
        let u: f64 = open01(rng);
        let q = q_hi + u * (q_lo - q_hi);
        return upper_tail_inverse(q).clamp(lo, hi);
    }
    let span = if hi.is_finite() {
        -(-0.5 * (hi * hi - lo * lo)).exp_m1()
    } else {
        1.0
    };
    loop {
        let u1: f64 = open01(rng);
        let u2: f64 = open01(rng);
        let x = (lo * lo - 2.0 * (-u1 * span).ln_1p()).sqrt();
        if u2 * x <= lo && x <= hi {
            return x;
        }
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

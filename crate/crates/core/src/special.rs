//! Small special functions used by the closed-form kernels.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `(sin x - x cos x) / x³`, which tends to 1/3 at the origin.
pub fn sin_minus_x_cos_over_cube(x: f64) -> f64 {
    if x.abs() < 1.0 {
        // Σ_{n≥1} (-1)^{n+1} 2n x^{2n-2} / (2n+1)!
        let x2 = x * x;
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 6.0; // (2n+1)! at n = 1
        for n in 1..=12u32 {
            let nf = f64::from(n);
            let term = 2.0 * nf * pow / fact;
            sum += if n % 2 == 1 { term } else { -term };
            pow *= x2;
            fact *= (2.0 * nf + 2.0) * (2.0 * nf + 3.0);
        }
        sum
    } else {
        (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// `Si(x) - π/2` for `x > 0`; kept separate from [`sine_integral`] so that
/// differences at large arguments do not cancel against π/2.
pub fn sine_integral_minus_half_pi(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 2.0 {
        return sine_integral_series(x) - FRAC_PI_2;
    }
    // Lentz continued fraction for E1(ix); Si(x) = π/2 + Im(e^{-ix} E1-part)
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..10_000u32 {
        let a = -f64::from((i - 1) * (i - 1));
        b += Complex64::new(2.0, 0.0);
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    h.im
}

/// Sine integral `Si(x) = ∫_0^x sin(t)/t dt`.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x <= 2.0 {
        sine_integral_series(x)
    } else {
        FRAC_PI_2 + sine_integral_minus_half_pi(x)
    }
}

fn sine_integral_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // x^{2n+1}/(2n+1)!
    let mut sum = x;
    for n in 1..40u32 {
        let k = f64::from(2 * n);
        term *= -x2 / (k * (k + 1.0));
        let add = term / (k + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

//! Sine integral and the closed-form tails of sinc-type envelopes.
//!
//! The tails are what remains of an integral over the whole real line once it
//! has been truncated to `[-m, m]`; they are needed because the sinc² envelope
//! only decays like `1/ν²` and a truncation at a handful of lobes would
//! otherwise leave a percent-level hole.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

const SERIES_LIMIT: f64 = 4.0;
const CF_MAX_ITER: usize = 10_000;

/// `π/2 − Si(x)` for `x ≥ 0`, evaluated without cancellation for large `x`.
pub fn si_complement(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= SERIES_LIMIT {
        return FRAC_PI_2 - si_series(x);
    }
    // Continued fraction for E1(ix) = -Ci(x) + i(Si(x) - π/2), modified Lentz.
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..CF_MAX_ITER {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let h = h * Complex64::new(x.cos(), -x.sin());
    -h.im
}

/// Sine integral `Si(x) = ∫₀ˣ sin t / t dt`.
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x <= SERIES_LIMIT {
        si_series(x)
    } else {
        FRAC_PI_2 - si_complement(x)
    }
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0usize;
    loop {
        let n = 2 * k;
        term *= -x2 / (((n + 2) * (n + 3)) as f64);
        let contrib = term / ((n + 3) as f64);
        sum += contrib;
        k += 1;
        if contrib.abs() <= 1e-17 * sum.abs() || k > 60 {
            break;
        }
    }
    sum
}

/// `∫_m^∞ sin(qν)/ν dν` for `m > 0`.
pub fn sin_over_nu_tail(q: f64, m: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        q.signum() * si_complement(q.abs() * m)
    }
}

/// `∫_m^∞ cos(qν)/ν² dν` for `m > 0`.
pub fn cos_over_square_tail(q: f64, m: f64) -> f64 {
    let q = q.abs();
    if q == 0.0 {
        1.0 / m
    } else {
        (q * m).cos() / m - q * si_complement(q * m)
    }
}

/// Two-sided tail `∫_{|ν|>m} sinc²(aν) cos(bν) dν`, with `sinc u = sin u / u`.
pub fn sinc2_cos_tail(a: f64, b: f64, m: f64) -> f64 {
    let a = a.abs();
    let j = |q: f64| cos_over_square_tail(q, m);
    (j(b) - 0.5 * j(b + 2.0 * a) - 0.5 * j(b - 2.0 * a)) / (a * a)
}

/// Two-sided tail `∫_{|ν|>m} sinc²(aν) dν`.
pub fn sinc2_tail(a: f64, m: f64) -> f64 {
    sinc2_cos_tail(a, 0.0, m)
}

/// Two-sided tail `∫_{|ν|>m} sinc(aν) cos(cν) dν` (conditionally convergent).
pub fn sinc_cos_tail(a: f64, c: f64, m: f64) -> f64 {
    let a = a.abs();
    (sin_over_nu_tail(a + c, m) + sin_over_nu_tail(a - c, m)) / a
}

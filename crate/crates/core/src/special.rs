//! Special functions used throughout the crate.
//!
//! `erf`/`erfc` come from `libm` (a port of the musl/FreeBSD implementations,
//! accurate to about 1 ulp). The log normal CDF switches to an asymptotic
//! series deep in the lower tail where `erfc` underflows.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, finite for every finite `x`.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > 5.0 {
        // Φ(x) = 1 - Q(x) with Q tiny
        (-0.5 * erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x > -37.0 {
        (0.5 * erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        // Mills ratio expansion; the truncation error at x = -37 is below 1e-20.
        let x2 = x * x;
        let inv = 1.0 / x2;
        let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv.powi(3) + 105.0 * inv.powi(4);
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Numerically stable `ln(Σ exp(v))`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

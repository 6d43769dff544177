//! Scalar special functions and small vector helpers.
//!
//! Everything goes through `libm` so results do not depend on the platform's
//! libm and the crate builds without `std`.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

pub use libm::{cos, erfc, exp, fabs, log, pow, sin, sqrt, tanh};

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x) / sqrt(2.0 * PI)
}

/// Standard normal distribution function, via the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().sum::<f64>() / a.len() as f64
}

/// Variance with divisor `n`.
pub fn variance(a: &[f64]) -> f64 {
    covariance(a, a)
}

/// Covariance with divisor `n`.
pub fn covariance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64
}

/// Pearson correlation; zero when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (va, vb) = (variance(a), variance(b));
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    covariance(a, b) / sqrt(va * vb)
}

/// Coefficient of determination of `fitted` against `target`.
/// `None` when the target has zero variance.
pub fn r_squared(target: &[f64], fitted: &[f64]) -> Option<f64> {
    let m = mean(target);
    let ss_tot: f64 = target.iter().map(|t| (t - m) * (t - m)).sum();
    if ss_tot <= 0.0 {
        return None;
    }
    let ss_res: f64 = target.iter().zip(fitted).map(|(t, f)| (t - f) * (t - f)).sum();
    Some(1.0 - ss_res / ss_tot)
}

//! Standard normal tail probabilities and quantiles.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

/// `P(Z <= x)` for a standard normal `Z`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `P(Z > x)`, computed directly to keep precision for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// The upper-`alpha` quantile `z_alpha`, i.e. `P(Z > z_alpha) = alpha`.
pub fn upper_quantile(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - alpha)
}

//! Normal-distribution helpers shared by the kernels and the FPT driver.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Φ(z), accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Ψ(z) = 1 − Φ(z).
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

pub fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}

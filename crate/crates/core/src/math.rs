//! Special functions used throughout the crate.

use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Euler Beta function `B(a, b)` for positive arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`, with every derivative
/// vanishing at both ends.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_matches_gamma_ratio() {
        let b = beta(0.25, 0.5);
        let g = gamma(0.25) * gamma(0.5) / gamma(0.75);
        assert!((b - g).abs() < 1e-12 * g);
    }

    #[test]
    fn normal_cdf_symmetry() {
        for &x in &[0.0, 0.3, 1.0, 2.5, 6.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn smooth_step_is_a_partition() {
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let s = smooth_step(t) + smooth_step(1.0 - t);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }
}

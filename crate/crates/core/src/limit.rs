//! Normalisations and oracles for the oscillatory-integral limit theorems.
//!
//! `M^ε_h = (ε·d(1/ε))^{−1} ∫_0^1 Φ(g(x/ε)) h(x) dx` converges in law to
//! `(V_m/m!)∫_0^1 h dZ`, where `Z` is the Hermite process of order `m`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hermite::{HermiteExpansion, RankedFunction};
use crate::hermite_process::{wiener_integral, IntegrandFn, ProcessPath};
use crate::lrd::{theoretical_covariance, GaussianPath, KernelSpec};
use crate::math::factorial;
use crate::quad::{adaptive, dyadic_from_left};

fn norm_const(kernel: &KernelSpec) -> f64 {
    let h = kernel.h;
    (factorial(kernel.m) / (h * (2.0 * h - 1.0))).sqrt()
}

/// `d(x) = sqrt(m!/(H(2H−1)))·x^H·L(x)^m`, with `L` the effective slowly
/// varying factor of the kernel.
pub fn d(kernel: &KernelSpec, x: f64) -> f64 {
    norm_const(kernel) * x.powf(kernel.h) * kernel.effective_l(x).powi(kernel.m as i32)
}

/// `𝔛(ε) = ε·d(1/ε) = sqrt(m!/(H(2H−1)))·ε^{1−H}·L(1/ε)^m`.
pub fn x_eps(kernel: &KernelSpec, eps: f64) -> f64 {
    norm_const(kernel) * eps.powf(1.0 - kernel.h) * kernel.effective_l(1.0 / eps).powi(kernel.m as i32)
}

/// `ε^{1−H}L(1/ε)^m`.
pub fn scaling_factor(kernel: &KernelSpec, eps: f64) -> f64 {
    eps.powf(1.0 - kernel.h) * kernel.slowly_varying.eval(1.0 / eps).powi(kernel.m as i32)
}

/// Covariance of `Φ(g)`: `Σ_{q≥1} (V_q²/q!)·r^q` at `r = R_g(x)`. The mean
/// term `q = 0` is excluded.
pub fn chaos_covariance(expansion: &HermiteExpansion, r: f64) -> f64 {
    let mut s = 0.0;
    let mut rq = 1.0;
    for (q, v) in expansion.coeffs.iter().enumerate().skip(1) {
        rq *= r;
        s += v * v / factorial(q as u32) * rq;
    }
    s
}

/// `∫_0^T (T−x)·k(x) dx` for a covariance-like `k` that is smooth away
/// from the origin and decays slowly.
fn triangle_integral<F: FnMut(f64) -> f64>(k: F, t: f64) -> f64 {
    let levels = (t.log2().ceil().max(0.0) as usize) + 12;
    let mut k = k;
    dyadic_from_left(|x| (t - x) * k(x), 0.0, t, levels, 1e-12 * t, 1e-9).value
}

/// Quadrature value of `Var[(1/d(T))∫_0^T H_m(g(y)) dy]`,
/// `(2/d(T)²)·∫_0^T (T−x)·m!·R_g(x)^m dx`.
pub fn taqqu_variance_oracle(kernel: &KernelSpec, t: f64) -> f64 {
    let m = kernel.m as i32;
    let mf = factorial(kernel.m);
    let i = triangle_integral(|x| mf * theoretical_covariance(kernel, x).powi(m), t);
    2.0 * i / d(kernel, t).powi(2)
}

/// `Var[M^ε_h] = 𝔛(ε)^{−2}∫∫h(x)h(y)R_Φ((x−y)/ε) dx dy` with `R_Φ` the
/// chaos covariance of `Φ(g)`, written as `2∫_0^1 R_Φ(r/ε)·C_h(r) dr` where
/// `C_h(r) = ∫ h(x)h(x+r) dx` is supplied by the caller.
pub fn finite_eps_variance_oracle<C: Fn(f64) -> f64>(
    kernel: &KernelSpec,
    expansion: &HermiteExpansion,
    autocorrelation: C,
    eps: f64,
) -> f64 {
    let f = |r: f64| {
        let rg = theoretical_covariance(kernel, r / eps);
        chaos_covariance(expansion, rg) * autocorrelation(r)
    };
    let levels = ((1.0 / eps).log2().ceil().max(0.0) as usize) + 12;
    let i = dyadic_from_left(f, 0.0, 1.0, levels, 1e-13, 1e-9).value;
    2.0 * i / x_eps(kernel, eps).powi(2)
}

/// Leading asymptote `(V_m²/m!)·L(x)^{2m}·x^{2H−2}` of the covariance of
/// `Φ(g)`.
pub fn covariance_asymptote(kernel: &KernelSpec, vm: f64, x: f64) -> f64 {
    let m = kernel.m;
    vm * vm / factorial(m) * kernel.effective_l(x).powi(2 * m as i32) * x.powf(2.0 * kernel.h - 2.0)
}

/// One row of the covariance-decay table for `Φ(g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceDecayRow {
    pub lag: f64,
    pub r_g: f64,
    /// `Σ_q (V_q²/q!) R_g^q`.
    pub r_phi: f64,
    pub asymptote: f64,
    pub ratio: f64,
}

pub fn covariance_decay_rows(kernel: &KernelSpec, phi: &RankedFunction, lags: &[f64]) -> Result<Vec<CovarianceDecayRow>> {
    for w in lags.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Inconsistent(format!("lags must be increasing, got {} then {}", w[0], w[1])));
        }
    }
    if lags.first().is_some_and(|&l| !(l > 0.0)) {
        return Err(Error::range("lags", lags[0], "lags must be positive"));
    }
    let vm = phi.leading_coefficient();
    Ok(lags
        .iter()
        .map(|&x| {
            let r_g = theoretical_covariance(kernel, x);
            let r_phi = chaos_covariance(&phi.expansion, r_g);
            let asymptote = covariance_asymptote(kernel, vm, x);
            CovarianceDecayRow {
                lag: x,
                r_g,
                r_phi,
                asymptote,
                ratio: r_phi / asymptote,
            }
        })
        .collect())
}

/// Number of aligned cells `n` with `n·Δ·ε = 1`, or an error when the grid
/// of the path does not resolve `[0, 1/ε]`.
pub fn aligned_cells(path: &GaussianPath, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::range("epsilon", eps, "must be positive"));
    }
    let exact = 1.0 / (eps * path.delta);
    let n = exact.round();
    if (exact - n).abs() > 1e-6 * exact.max(1.0) || n < 1.0 {
        return Err(Error::Resolution(format!(
            "1/(epsilon*delta) = {exact} is not an integer; choose delta = 1/(epsilon*k)"
        )));
    }
    let n = n as usize;
    if path.len() < n + 1 {
        return Err(Error::Coverage(format!(
            "path ends at {} but [0, 1/epsilon] = [0, {}] is needed",
            path.extent(),
            1.0 / eps
        )));
    }
    Ok(n)
}

/// `Δ = 1/(ε·⌈s/ε⌉)`: at least `s` samples per unit of the fast variable
/// with `1/(εΔ)` an integer.
pub fn aligned_delta(eps: f64, samples_per_unit: f64) -> f64 {
    let k = (samples_per_unit / eps).ceil();
    1.0 / (eps * k)
}

/// `M^ε_h` by the trapezoidal rule on the path grid `x_j = jεΔ`.
pub fn oscillatory_integral<H: Fn(f64) -> f64>(
    path: &GaussianPath,
    phi: &RankedFunction,
    h: H,
    eps: f64,
    kernel: &KernelSpec,
) -> Result<f64> {
    let n = aligned_cells(path, eps)?;
    let dx = 1.0 / n as f64;
    let mut s = 0.0;
    for j in 0..=n {
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        let x = j as f64 * dx;
        let hv = h(x);
        if hv != 0.0 {
            s += w * phi.eval(path.values[j]) * hv;
        }
    }
    Ok(s * dx / x_eps(kernel, eps))
}

/// `M^0_h = (V_m/m!)·∫ h dZ` on a sampled Hermite-process path.
pub fn limit_sample(phi: &RankedFunction, h: &IntegrandFn, z: &ProcessPath) -> Result<f64> {
    let m = phi.declared_rank;
    let factor = phi.expansion.coeffs[m] / factorial(m as u32);
    Ok(factor * wiener_integral(z, h)?)
}

/// `∫_0^1 k(x) dx` by adaptive quadrature; used for limit kernels in tests.
pub fn unit_integral<F: FnMut(f64) -> f64>(k: F) -> f64 {
    adaptive(k, 0.0, 1.0, 1e-14, 1e-12).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::pure_hermite;

    #[test]
    fn x_eps_is_eps_times_d() {
        let k = KernelSpec::default_for(2, 0.9).unwrap();
        for eps in [0.1, 0.03, 1e-3] {
            let a = x_eps(&k, eps);
            let b = eps * d(&k, 1.0 / eps);
            assert!((a - b).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn scaling_factor_without_slow_variation() {
        let k = KernelSpec::default_for(2, 0.9).unwrap();
        for eps in [0.1, 1e-3, 1e-6] {
            let v = scaling_factor(&k, eps);
            assert!((v - eps.powf(1.0 - k.h)).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_hermite_chaos_covariance() {
        let phi = pure_hermite(2).unwrap();
        for r in [0.0, 0.1, 0.7, 1.0] {
            assert!((chaos_covariance(&phi.expansion, r) - 2.0 * r * r).abs() < 1e-15);
        }
    }

    #[test]
    fn lags_must_increase() {
        let k = KernelSpec::default_for(1, 0.75).unwrap();
        let phi = pure_hermite(1).unwrap();
        assert!(covariance_decay_rows(&k, &phi, &[1.0, 1.0]).is_err());
        assert!(covariance_decay_rows(&k, &phi, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn aligned_delta_is_aligned() {
        for eps in [0.1, 0.03, 0.01, 1e-3] {
            let d = aligned_delta(eps, 20.0);
            let n = 1.0 / (eps * d);
            assert!((n - n.round()).abs() < 1e-9 && d <= 0.05 + 1e-15);
        }
    }
}

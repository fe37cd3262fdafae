//! The long-range dependent Gaussian process `g(x) = ∫ e(x−ξ) dW_ξ`.
//!
//! The kernel is `e(u) = amp·(u+u²)^{(H0−3/2)/2}·L(u)` on `u > 0` and zero
//! elsewhere. With `L ≡ 1` the amplitude is the closed-form constant `C0`;
//! otherwise it is fixed numerically so that `∫ e² = 1`.

mod moving_average;

pub use moving_average::{simulate_path, GaussianPath, MovingAverage, DEFAULT_TAIL_TOLERANCE};

use alloc::format;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

use crate::error::{Error, Result};
use crate::math::beta;
use crate::quad::{self, adaptive, power_tail, singular_head};

/// Slowly varying factor of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub enum SlowlyVarying {
    #[default]
    ConstantOne,
    /// `(1 + log(1+u))^p`.
    LogPower { p: f64 },
}

impl SlowlyVarying {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            SlowlyVarying::ConstantOne => 1.0,
            SlowlyVarying::LogPower { p } => (1.0 + u.max(0.0).ln_1p()).powf(p),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SlowlyVarying::ConstantOne)
            || matches!(self, SlowlyVarying::LogPower { p } if *p == 0.0)
    }
}


pub(crate) fn check_h0(m: u32, h0: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::range("m", 0.0, "m must be a positive integer"));
    }
    let lo = 1.0 - 1.0 / (2.0 * m as f64);
    if !(h0 > lo && h0 < 1.0) {
        return Err(Error::range(
            "h0",
            h0,
            format!("requires 1 - 1/(2m) < h0 < 1, i.e. {lo} < h0 < 1 for m = {m}"),
        ));
    }
    Ok(())
}

/// `C0 = (∫_0^∞ (u+u²)^{H0−3/2} du)^{−1/2} = B(H0−1/2, 2−2H0)^{−1/2}`.
pub fn normalization_constant(m: u32, h0: f64) -> Result<f64> {
    check_h0(m, h0)?;
    let a = h0 - 1.5;
    Ok(beta(a + 1.0, -2.0 * a - 1.0).powf(-0.5))
}

/// Integral of a non-negative function on `(0, ∞)` that behaves like
/// `u^q` at the origin and `u^{-p}` at infinity.
pub(crate) fn half_line<F: FnMut(f64) -> f64>(mut f: F, q: f64, p: f64, split: f64, tol: f64) -> f64 {
    let head = singular_head(&mut f, q, 1.0, tol * 1e-3, tol).value;
    let mid = quad::dyadic_from_left(&mut f, 1.0, split, (split.log2().ceil() as usize).max(1), tol * 1e-3, tol).value;
    let tail = power_tail(&mut f, split, p, tol * 1e-3, tol).value;
    head + mid + tail
}

/// Moving-average kernel together with its derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub m: u32,
    pub h0: f64,
    pub slowly_varying: SlowlyVarying,
    /// Closed-form constant `C0`.
    pub c0: f64,
    /// Amplitude actually multiplying `(u+u²)^{a/2}L(u)`; equals `c0` for `L ≡ 1`.
    pub amp: f64,
    /// Self-similarity index `H = 1 + m(H0−1)`.
    pub h: f64,
    /// Exponent bound of the backward-support condition. Stored, unused by
    /// the forward-supported kernel.
    pub gamma: Option<f64>,
}

impl KernelSpec {
    pub fn new(m: u32, h0: f64, slowly_varying: SlowlyVarying) -> Result<Self> {
        let c0 = normalization_constant(m, h0)?;
        if let SlowlyVarying::LogPower { p } = slowly_varying {
            if !p.is_finite() {
                return Err(Error::range("slowly_varying.p", p, "must be finite"));
            }
        }
        let a = h0 - 1.5;
        let amp = if slowly_varying.is_constant() {
            c0
        } else {
            let l = slowly_varying;
            let mass = half_line(
                |u: f64| (u + u * u).powf(a) * l.eval(u).powi(2),
                a,
                -2.0 * a,
                64.0,
                1e-12,
            );
            mass.powf(-0.5)
        };
        Ok(KernelSpec {
            m,
            h0,
            slowly_varying,
            c0,
            amp,
            h: 1.0 + m as f64 * (h0 - 1.0),
            gamma: None,
        })
    }

    pub fn default_for(m: u32, h0: f64) -> Result<Self> {
        Self::new(m, h0, SlowlyVarying::ConstantOne)
    }

    /// Sets the stored backward-support exponent after checking its range.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        let hi = (self.h0 - (1.0 - 1.0 / (2.0 * self.m as f64))).min(1.0 - self.h0);
        if !(gamma > 0.0 && gamma < hi) {
            return Err(Error::range("gamma", gamma, format!("requires 0 < gamma < {hi}")));
        }
        self.gamma = Some(gamma);
        Ok(self)
    }

    /// `H0 − 3/2`.
    pub fn exponent(&self) -> f64 {
        self.h0 - 1.5
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.amp * (u + u * u).powf(0.5 * self.exponent()) * self.slowly_varying.eval(u)
    }

    /// `L_ref` such that `e(u) = C0·(u+u²)^{a/2}·L(u)/L_ref`.
    pub fn l_ref(&self) -> f64 {
        self.c0 / self.amp
    }

    /// Slowly varying function in the asymptote `e(u) ~ C0·u^{a}·L_eff(u)`.
    pub fn effective_l(&self, u: f64) -> f64 {
        self.slowly_varying.eval(u) / self.l_ref()
    }

    /// `∫_0^∞ e(u)² du`, computed by quadrature.
    pub fn energy(&self) -> f64 {
        let a = self.exponent();
        half_line(|u| self.eval(u).powi(2), a, -2.0 * a, 64.0, 1e-12)
    }

    /// `∫_T^∞ e(u)² du`.
    pub fn tail_energy(&self, t: f64) -> f64 {
        let a = self.exponent();
        power_tail(|u| self.eval(u).powi(2), t, -2.0 * a, 1e-16, 1e-10).value
    }
}

pub fn eval_kernel(spec: &KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

/// `R_g(x) = ∫_0^∞ e(u)e(u+x) du`.
pub fn theoretical_covariance(spec: &KernelSpec, x: f64) -> f64 {
    let x = x.abs();
    let a = spec.exponent();
    let f = |u: f64| spec.eval(u) * spec.eval(u + x);
    let q = if x == 0.0 { a } else { 0.5 * a };
    let split = 64.0 * x.max(1.0);
    let head = singular_head(f, q, 1.0, 1e-14, 1e-11).value;
    let levels = (split.log2().ceil() as usize).max(1);
    let mid = quad::dyadic_from_left(f, 1.0, split, levels, 1e-14, 1e-11).value;
    let tail = power_tail(f, split, -2.0 * a, 1e-16, 1e-11).value;
    head + mid + tail
}

/// `L(y)/L(x)`.
pub fn potter_ratio_bound(l: &SlowlyVarying, delta_exp: f64, x: f64, y: f64) -> f64 {
    debug_assert!(x > 0.0 && y > 0.0 && delta_exp > 0.0);
    l.eval(y) / l.eval(x)
}

/// Smallest `C` with `L(y)/L(x) ≤ C·max{(x/y)^δ, (y/x)^δ}` over all pairs of
/// the grid.
pub fn fit_potter_constant(l: &SlowlyVarying, delta_exp: f64, grid: &[f64]) -> f64 {
    let mut c: f64 = 0.0;
    for &x in grid {
        for &y in grid {
            let r = potter_ratio_bound(l, delta_exp, x, y);
            let b = (x / y).powf(delta_exp).max((y / x).powf(delta_exp));
            c = c.max(r / b);
        }
    }
    c
}

/// Finite-grid surrogate for the backward-support condition: the largest
/// value over the grid of
/// `∫_{lower}^0 |e(u)e(xy+u)| du / (x^{2H0−2} L(x)² y^{2H0−2−2γ})`.
///
/// The stored kernels vanish on `u ≤ 0`, so this is zero for them; it exists
/// for user-supplied kernels that do have backward support.
pub fn backward_overlap_ratio<E: Fn(f64) -> f64>(
    e: E,
    h0: f64,
    gamma: f64,
    l: &SlowlyVarying,
    xs: &[f64],
    ys: &[f64],
    lower: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in xs {
        for &y in ys {
            let v = adaptive(|u| (e(u) * e(x * y + u)).abs(), lower, 0.0, 1e-14, 1e-9).value;
            let scale = x.powf(2.0 * h0 - 2.0) * l.eval(x).powi(2) * y.powf(2.0 * h0 - 2.0 - 2.0 * gamma);
            worst = worst.max(v / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::gamma;

    #[test]
    fn c0_matches_gamma_identity() {
        let c0 = normalization_constant(1, 0.75).unwrap();
        let oracle = (gamma(0.25) * gamma(0.5) / gamma(0.75)).powf(-0.5);
        assert!((c0 - oracle).abs() < 1e-12);
        assert!((c0 - 0.4367).abs() < 1e-4);
    }

    #[test]
    fn h0_range_is_enforced() {
        assert!(normalization_constant(1, 0.5).is_err());
        assert!(normalization_constant(2, 0.75).is_err());
        assert!(normalization_constant(2, 0.76).is_ok());
        assert!(normalization_constant(1, 1.0).is_err());
        let msg = alloc::format!("{}", normalization_constant(1, 0.4).unwrap_err());
        assert!(msg.contains("1 - 1/(2m)"), "{msg}");
    }

    #[test]
    fn kernel_is_forward_supported() {
        let k = KernelSpec::default_for(1, 0.75).unwrap();
        for u in [-5.0, -1e-9, 0.0] {
            assert_eq!(eval_kernel(&k, u), 0.0);
        }
        assert!(eval_kernel(&k, 1e-12).is_finite());
    }

    #[test]
    fn energy_is_one() {
        for (m, h0) in [(1, 0.75), (2, 0.9), (3, 0.95), (1, 0.55)] {
            let k = KernelSpec::default_for(m, h0).unwrap();
            assert!((k.energy() - 1.0).abs() < 1e-8, "m={m} h0={h0}: {}", k.energy());
        }
        let k = KernelSpec::new(1, 0.8, SlowlyVarying::LogPower { p: 1.0 }).unwrap();
        assert!((k.energy() - 1.0).abs() < 1e-8);
        assert!(k.amp < k.c0);
    }

    #[test]
    fn far_kernel_asymptote() {
        let k = KernelSpec::default_for(1, 0.75).unwrap();
        let r = eval_kernel(&k, 1e4) / (k.c0 * 1e4f64.powf(-0.75));
        let oracle = (1.0 + 1e-4f64).powf(-0.375);
        assert!((r - oracle).abs() < 1e-12);
        assert!((0.99..=1.01).contains(&r));
    }

    #[test]
    fn covariance_at_zero_is_energy() {
        let k = KernelSpec::default_for(2, 0.9).unwrap();
        assert!((theoretical_covariance(&k, 0.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn potter_examples() {
        let one = SlowlyVarying::ConstantOne;
        assert_eq!(potter_ratio_bound(&one, 0.1, 3.0, 70.0), 1.0);
        let lp = SlowlyVarying::LogPower { p: 1.0 };
        let e = core::f64::consts::E;
        let r = potter_ratio_bound(&lp, 0.1, e, e * e);
        let direct = (1.0 + (1.0 + e * e).ln()) / (1.0 + (1.0 + e).ln());
        assert!((r - direct).abs() < 1e-15);
    }

    #[test]
    fn gamma_range() {
        let k = KernelSpec::default_for(1, 0.75).unwrap();
        assert!(k.clone().with_gamma(0.2).is_ok());
        assert!(k.clone().with_gamma(0.26).is_err());
        assert!(k.with_gamma(0.0).is_err());
    }

    #[test]
    fn backward_overlap_vanishes_for_forward_kernel() {
        let k = KernelSpec::default_for(1, 0.75).unwrap();
        let r = backward_overlap_ratio(|u| k.eval(u), 0.75, 0.1, &k.slowly_varying, &[10.0, 100.0], &[0.5, 1.0], -50.0);
        assert_eq!(r, 0.0);
    }
}

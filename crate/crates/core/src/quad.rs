//! One-dimensional quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod
//! and substitutions for algebraic end-point singularities and power tails.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
    }
    let d = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, d)
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
///
/// Bisects the interval with the largest error estimate until the total
/// error is below `max(abs_tol, rel_tol·|I|)` or `max_intervals` is reached.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Estimate {
    const MAX_INTERVALS: usize = 2000;
    if a == b {
        return Estimate { value: 0.0, error: 0.0 };
    }
    let (v, e) = kronrod15(&mut f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) && parts.len() < MAX_INTERVALS {
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, pv, pe) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            parts.push((lo, hi, pv, 0.0));
            continue;
        }
        let (v1, e1) = kronrod15(&mut f, lo, mid);
        let (v2, e2) = kronrod15(&mut f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    // recompute the sum to shed accumulated cancellation
    let value = parts.iter().map(|p| p.2).sum();
    let error = parts.iter().map(|p| p.3).sum();
    Estimate { value, error }
}

/// `∫_0^b f(u) du` for integrands behaving like `u^q` (`q > -1`) at the origin.
///
/// The substitution `u = b·t^{1/(1+q)}` turns the leading singular factor
/// into a bounded integrand.
pub fn singular_head<F: FnMut(f64) -> f64>(
    mut f: F,
    q: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Estimate {
    debug_assert!(q > -1.0);
    let r = 1.0 / (1.0 + q);
    adaptive(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let u = b * t.powf(r);
            f(u) * b * r * t.powf(r - 1.0)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// `∫_U^∞ f(u) du` for integrands decaying like `u^{-p}` with `p > 1`.
///
/// Uses `u = U·v^{-1/(p-1)}`, which maps the tail onto `(0, 1]` with a
/// bounded integrand.
pub fn power_tail<F: FnMut(f64) -> f64>(
    mut f: F,
    lower: f64,
    p: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Estimate {
    debug_assert!(p > 1.0 && lower > 0.0);
    let s = 1.0 / (p - 1.0);
    adaptive(
        |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let u = lower * v.powf(-s);
            if !u.is_finite() {
                return 0.0;
            }
            f(u) * lower * s * v.powf(-s - 1.0)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Integrates `f` over `[a, b]` split at dyadic points `a + (b-a)·2^{-k}`,
/// which handles integrands that vary over many scales near `a`.
pub fn dyadic_from_left<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    levels: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> Estimate {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let lo = a + 0.5 * (hi - a);
        let e = adaptive(&mut f, lo, hi, abs_tol / levels as f64, rel_tol);
        value += e.value;
        error += e.error;
        hi = lo;
    }
    let e = adaptive(&mut f, a, hi, abs_tol / levels as f64, rel_tol);
    Estimate {
        value: value + e.value,
        error: error + e.error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 8, 20] {
            let gl = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let v = gl.integrate(|x| x.powi(deg as i32 - 1), 0.0, 1.0);
            assert!((v - 1.0 / deg as f64).abs() < 1e-13, "n={n}");
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn kronrod_on_smooth_function() {
        let e = adaptive(|x: f64| x.sin(), 0.0, PI, 1e-13, 1e-13);
        assert!((e.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn head_substitution_handles_inverse_root() {
        // ∫_0^1 u^{-3/4} du = 4
        let e = singular_head(|u: f64| u.powf(-0.75), -0.75, 1.0, 1e-12, 1e-12);
        assert!((e.value - 4.0).abs() < 1e-10, "{}", e.value);
    }

    #[test]
    fn tail_substitution() {
        // ∫_2^∞ u^{-1.5} du = 2/sqrt(2)
        let e = power_tail(|u: f64| u.powf(-1.5), 2.0, 1.5, 1e-13, 1e-13);
        assert!((e.value - 2.0 / 2f64.sqrt()).abs() < 1e-11);
        // log factor: ∫_1^∞ ln(u) u^{-2} du = 1
        let e = power_tail(|u: f64| u.ln() / (u * u), 1.0, 2.0, 1e-13, 1e-13);
        assert!((e.value - 1.0).abs() < 1e-9, "{}", e.value);
    }
}

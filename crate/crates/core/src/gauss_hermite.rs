//! Gauss–Hermite quadrature for the standard Gaussian measure `ν`.

use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

pub const DEFAULT_ORDER: usize = 200;

/// Nodes and weights with `Σ w_i f(x_i) ≈ ∫ f dν`, `ν = N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let (nodes, weights) = golub_welsch(n);
        GaussHermite { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫ f dν`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

// Eigen-decomposition of the Jacobi matrix of the probabilists' Hermite
// recurrence (zero diagonal, off-diagonal sqrt(k)) by implicit QL, tracking
// only the first component of each eigenvector. Newton iteration from the
// classical asymptotic guesses hops between neighbouring roots for n ≳ 100.
fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = alloc::vec![0.0f64; n];
    let mut e: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    e.push(0.0);
    let mut q = alloc::vec![0.0f64; n];
    q[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 200, "QL iteration did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let t = q[i + 1];
                q[i + 1] = s * q[i] + c * t;
                q[i] = c * q[i] - s * t;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut nodes: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let mut weights: Vec<f64> = idx.iter().map(|&i| q[i] * q[i]).collect();
    // symmetrise: the rule is exactly even
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        for n in [10usize, 50, 200] {
            let gh = GaussHermite::new(n);
            assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-13, "n={n}");
            assert!(gh.expect(|x| x).abs() < 1e-13);
            assert!((gh.expect(|x| x * x) - 1.0).abs() < 1e-12);
            assert!((gh.expect(|x| x.powi(4)) - 3.0).abs() < 1e-11);
            assert!((gh.expect(|x| x.powi(8)) - 105.0).abs() < 1e-8);
        }
    }

    #[test]
    fn nodes_are_sorted_and_distinct() {
        let gh = GaussHermite::new(200);
        for w in gh.nodes.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn exponential_moment() {
        let gh = GaussHermite::new(DEFAULT_ORDER);
        let v = gh.expect(|x| (0.7 * x).exp());
        assert!((v - (0.245f64).exp()).abs() < 1e-13);
    }
}

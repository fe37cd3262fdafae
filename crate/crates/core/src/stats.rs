//! Ensemble statistics: moments with standard errors, Kolmogorov–Smirnov
//! tests and the energy distance with a permutation p-value.

use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when std is linked in by dev-dependencies
use num_traits::Float;

use crate::rng::Uniform;

/// Sample moments with delete-one jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Excess kurtosis (0 for a Gaussian).
    pub excess_kurtosis: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_skewness: f64,
    pub se_excess_kurtosis: f64,
}

fn central_from_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> (f64, f64, f64, f64) {
    let mu = s1 / n;
    let m2 = s2 / n - mu * mu;
    let m3 = s3 / n - 3.0 * mu * s2 / n + 2.0 * mu * mu * mu;
    let m4 = s4 / n - 4.0 * mu * s3 / n + 6.0 * mu * mu * s2 / n - 3.0 * mu.powi(4);
    (mu, m2, m3, m4)
}

fn shape(n: f64, m2: f64, m3: f64, m4: f64) -> (f64, f64, f64) {
    let var = m2 * n / (n - 1.0);
    if m2 <= 0.0 {
        return (var.max(0.0), 0.0, 0.0);
    }
    (var, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 3, "moments need at least three samples");
        let nf = n as f64;
        // shift by the mean first so the power sums stay well-conditioned
        let shift = xs.iter().sum::<f64>() / nf;
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        for &x in xs {
            let y = x - shift;
            s1 += y;
            s2 += y * y;
            s3 += y * y * y;
            s4 += y * y * y * y;
        }
        let (mu, m2, m3, m4) = central_from_sums(nf, s1, s2, s3, s4);
        let (var, skew, kurt) = shape(nf, m2, m3, m4);

        let mut jk = [0.0f64; 3];
        let mut jk2 = [0.0f64; 3];
        for &x in xs {
            let y = x - shift;
            let (_, a2, a3, a4) = central_from_sums(
                nf - 1.0,
                s1 - y,
                s2 - y * y,
                s3 - y * y * y,
                s4 - y * y * y * y,
            );
            let (v, s, k) = shape(nf - 1.0, a2, a3, a4);
            for (i, t) in [v, s, k].into_iter().enumerate() {
                jk[i] += t;
                jk2[i] += t * t;
            }
        }
        let jack_se = |i: usize| {
            let mean = jk[i] / nf;
            ((nf - 1.0) * (jk2[i] / nf - mean * mean)).max(0.0).sqrt()
        };
        Moments {
            n,
            mean: shift + mu,
            variance: var,
            skewness: skew,
            excess_kurtosis: kurt,
            se_mean: (var / nf).sqrt(),
            se_variance: jack_se(0),
            se_skewness: jack_se(1),
            se_excess_kurtosis: jack_se(2),
        }
    }

    /// Second moment about zero with its standard error.
    pub fn raw_second(xs: &[f64]) -> (f64, f64) {
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let n = sq.len() as f64;
        let mean = sq.iter().sum::<f64>() / n;
        let var = sq.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

/// Kolmogorov survival function `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// One-sample test of `xs` against the continuous CDF `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsResult {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    let a = sorted(xs);
    let b = sorted(ys);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p(d, ne),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn energy_from_matrix(dist: &[f64], total: usize, labels: &[bool]) -> f64 {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    let n = labels.iter().filter(|l| **l).count() as f64;
    let m = total as f64 - n;
    for i in 0..total {
        let row = &dist[i * total..(i + 1) * total];
        for j in (i + 1)..total {
            let d = row[j];
            match (labels[i], labels[j]) {
                (true, true) => xx += d,
                (false, false) => yy += d,
                _ => xy += d,
            }
        }
    }
    2.0 * xy / (n * m) - 2.0 * xx / (n * n) - 2.0 * yy / (m * m)
}

/// Two-sample energy distance `2E|X−Y| − E|X−X'| − E|Y−Y'|` (V-statistic).
///
/// Samples are flat row-major arrays of `dim`-vectors.
pub fn energy_distance(xs: &[f64], ys: &[f64], dim: usize) -> f64 {
    let n = xs.len() / dim;
    let m = ys.len() / dim;
    let mean = |a: &[f64], b: &[f64], na: usize, nb: usize| {
        let mut s = 0.0;
        for i in 0..na {
            for j in 0..nb {
                s += euclid(&a[i * dim..(i + 1) * dim], &b[j * dim..(j + 1) * dim]);
            }
        }
        s / (na * nb) as f64
    };
    2.0 * mean(xs, ys, n, m) - mean(xs, xs, n, n) - mean(ys, ys, m, m)
}

/// Energy distance with a permutation p-value.
pub fn energy_test(xs: &[f64], ys: &[f64], dim: usize, permutations: usize, seed: u64) -> EnergyResult {
    let n = xs.len() / dim;
    let m = ys.len() / dim;
    let total = n + m;
    let point = |k: usize| {
        if k < n {
            &xs[k * dim..(k + 1) * dim]
        } else {
            &ys[(k - n) * dim..(k - n + 1) * dim]
        }
    };
    let mut dist = alloc::vec![0.0; total * total];
    for i in 0..total {
        for j in (i + 1)..total {
            let d = euclid(point(i), point(j));
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }
    }
    let mut labels: Vec<bool> = (0..total).map(|k| k < n).collect();
    let observed = energy_from_matrix(&dist, total, &labels);
    let mut rng = Uniform::new(seed, 0x5eed);
    let mut hits = 0usize;
    for _ in 0..permutations {
        rng.shuffle(&mut labels);
        if energy_from_matrix(&dist, total, &labels) >= observed {
            hits += 1;
        }
    }
    EnergyResult {
        statistic: observed,
        p_value: (hits + 1) as f64 / (permutations + 1) as f64,
    }
}

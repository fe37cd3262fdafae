//! Exact fractional Brownian motion by circulant embedding of the
//! fractional Gaussian noise covariance. Used as an independent reference
//! for the order-one Hermite process.

use oscillab_core::rng::NormalStream;
use oscillab_core::{Error, ProcessPath};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Path together with the relative eigenvalue mass removed by clipping
/// (zero when the embedding is nonnegative, which is the usual case).
#[derive(Debug, Clone)]
pub struct FbmSample {
    pub path: ProcessPath,
    pub clipping_defect: f64,
}

/// Reusable generator for `n` steps on `[0, t_max]`.
pub struct FbmOracle {
    pub h: f64,
    pub n: usize,
    pub t_max: f64,
    sqrt_eig: Vec<f64>,
    pub clipping_defect: f64,
    planner_len: usize,
}

fn fgn_cov(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let h2 = 2.0 * h;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

impl FbmOracle {
    pub fn new(h: f64, n: usize, t_max: f64) -> Result<Self, Error> {
        if !(h > 0.5 && h < 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "h",
                value: h,
                constraint: "requires 1/2 < H < 1".into(),
            });
        }
        if n < 1 || !(t_max > 0.0) {
            return Err(Error::Inconsistent(format!("grid with {n} steps on [0, {t_max}]")));
        }
        let len = 2 * n;
        let mut row: Vec<Complex64> = (0..len)
            .map(|j| {
                let k = if j <= n { j } else { len - j };
                Complex64::new(fgn_cov(h, k), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(len).process(&mut row);
        let total: f64 = row.iter().map(|c| c.re.abs()).sum();
        let negative: f64 = row.iter().filter(|c| c.re < 0.0).map(|c| -c.re).sum();
        let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) / len as f64).sqrt()).collect();
        Ok(FbmOracle {
            h,
            n,
            t_max,
            sqrt_eig,
            clipping_defect: negative / total,
            planner_len: len,
        })
    }

    /// Path driven by the normal stream `(seed, 0)`.
    pub fn sample(&self, seed: u64) -> ProcessPath {
        let len = self.planner_len;
        let mut stream = NormalStream::new(seed, 0);
        let mut w: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|s| {
                let (a, b) = (stream.next_normal(), stream.next_normal());
                Complex64::new(s * a, s * b)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(len).process(&mut w);
        let dt = self.t_max / self.n as f64;
        let scale = dt.powf(self.h);
        let mut values = Vec::with_capacity(self.n + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for c in &w[..self.n] {
            acc += c.re * scale;
            values.push(acc);
        }
        ProcessPath {
            times: (0..=self.n).map(|j| j as f64 * dt).collect(),
            values,
            m: 1,
            h: self.h,
            seed,
        }
    }
}

/// One fBm path with Hurst index `h` on `n` uniform steps of `[0, t_max]`.
pub fn fbm_oracle(h: f64, n: usize, t_max: f64, seed: u64) -> Result<FbmSample, Error> {
    let o = FbmOracle::new(h, n, t_max)?;
    Ok(FbmSample {
        path: o.sample(seed),
        clipping_defect: o.clipping_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use oscillab_core::stats::Moments;

    #[test]
    fn embedding_is_nonnegative() {
        for h in [0.55, 0.75, 0.95] {
            assert!(FbmOracle::new(h, 256, 1.0).unwrap().clipping_defect < 1e-12);
        }
    }

    #[test]
    fn increments_have_the_right_variance() {
        let o = FbmOracle::new(0.8, 64, 2.0).unwrap();
        let paths: Vec<ProcessPath> = (0..2000).map(|s| o.sample(s)).collect();
        for (j, k) in [(0usize, 32usize), (16, 48), (0, 64)] {
            let d: Vec<f64> = paths.iter().map(|p| p.values[k] - p.values[j]).collect();
            let (m2, se) = Moments::raw_second(&d);
            let want = (o.t_max * (k - j) as f64 / 64.0).powf(1.6);
            assert!((m2 - want).abs() < 4.0 * se, "{m2} vs {want} ± {se}");
        }
    }

    #[test]
    fn near_brownian_limit() {
        let o = FbmOracle::new(0.5 + 1e-9, 32, 1.0).unwrap();
        let paths: Vec<ProcessPath> = (0..3000).map(|s| o.sample(s)).collect();
        // Cov(B(1/4), B(1)) ≈ 1/4
        let c: Vec<f64> = paths.iter().map(|p| p.values[8] * p.values[32]).collect();
        let m = Moments::of(&c);
        assert!((m.mean - 0.25).abs() < 4.0 * m.se_mean);
    }

    #[test]
    fn rejects_bad_hurst() {
        assert!(FbmOracle::new(0.4, 10, 1.0).is_err());
    }
}

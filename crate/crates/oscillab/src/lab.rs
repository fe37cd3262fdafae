//! Monte Carlo experiments: convergence of oscillatory integrals and of
//! the rescaled corrector, covariance decay and the Taqqu normalisation.
//!
//! Replica `i` uses the seed `seed_base + i` for the Gaussian path and an
//! offset seed for the limit ensemble, so every number is reproducible from
//! the configuration alone regardless of the number of worker threads.

use std::sync::Arc;

use oscillab_core::hermite::hermite_eval;
use oscillab_core::hermite_process::{lambda_norm, wiener_integral, HermiteProcess, HermiteProcessConfig, IntegrandFn};
use oscillab_core::homogenize::{decompose, solve_on, LimitKernel, Medium, ProblemSpec, Source};
use oscillab_core::limit::{
    aligned_delta, covariance_decay_rows, d, finite_eps_variance_oracle, limit_sample, oscillatory_integral,
    taqqu_variance_oracle, x_eps,
};
use oscillab_core::math::{factorial, normal_cdf};
use oscillab_core::stats::{energy_test, ks_one_sample, ks_two_sample, Moments};
use oscillab_core::{Error, KernelSpec, MovingAverage, RankedFunction};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::report::Table;
use crate::LabError;

/// Offset between the seeds of the Gaussian paths and of the limit paths.
pub const LIMIT_SEED_OFFSET: u64 = 1 << 40;

/// Worker pool capped by `OSCILLAB_THREADS` when set.
pub fn thread_pool() -> Result<ThreadPool, LabError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("OSCILLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| LabError::Validation(format!("OSCILLAB_THREADS = `{v}` is not a positive integer")))?;
        if n == 0 {
            return Err(LabError::Validation("OSCILLAB_THREADS must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| LabError::Runtime(format!("cannot start worker pool: {e}")))
}

fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(pool: &ThreadPool, n: usize, f: F) -> Vec<T> {
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

fn split<T>(results: Vec<Result<T, Error>>, failures: &mut Vec<String>) -> Vec<T> {
    let mut ok = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failures.push(format!("replica {i}: {e}")),
        }
    }
    ok
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentsReport {
    pub n: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub variance: f64,
    pub se_variance: f64,
    pub skewness: f64,
    pub se_skewness: f64,
    pub excess_kurtosis: f64,
    pub se_excess_kurtosis: f64,
}

impl From<Moments> for MomentsReport {
    fn from(m: Moments) -> Self {
        MomentsReport {
            n: m.n,
            mean: m.mean,
            se_mean: m.se_mean,
            variance: m.variance,
            se_variance: m.se_variance,
            skewness: m.skewness,
            se_skewness: m.se_skewness,
            excess_kurtosis: m.excess_kurtosis,
            se_excess_kurtosis: m.se_excess_kurtosis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flag {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Flag {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Flag {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    fn above(name: &str, value: f64, threshold: f64) -> Self {
        Flag {
            name: name.into(),
            value,
            threshold,
            passed: value > threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Results at one value of `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub delta: f64,
    pub cells: usize,
    pub x_eps: f64,
    /// One entry per component (a single one for scalar modes).
    pub moments: Vec<MomentsReport>,
    pub limit_variance: Vec<f64>,
    pub variance_ratio: Vec<f64>,
    pub oracle_variance: Option<f64>,
    pub oracle_z: Option<f64>,
    pub ks_limit: Option<TestResult>,
    pub ks_normal: Option<TestResult>,
    pub energy: TestResult,
    pub rho_ratio: Option<MeanSe>,
    pub max_reconstruction_error: Option<f64>,
    pub median_sup_corrector: Option<f64>,
    pub flags: Vec<Flag>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub values: Vec<f64>,
    pub inversions: usize,
    pub allowed_inversions: usize,
    pub passed: bool,
}

impl Trend {
    pub fn of(values: Vec<f64>, allowed: usize) -> Self {
        let inversions = values.windows(2).filter(|w| w[1] > w[0]).count();
        Trend {
            values,
            inversions,
            allowed_inversions: allowed,
            passed: inversions <= allowed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub mode: String,
    pub m: u32,
    pub h0: f64,
    pub hurst: f64,
    pub v_m: f64,
    pub replicas: usize,
    pub seed_base: u64,
    pub probes: Vec<f64>,
    pub limit_moments: Vec<MomentsReport>,
    pub per_epsilon: Vec<EpsilonSummary>,
    pub energy_trend: Trend,
}

impl ConvergenceReport {
    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut summary = Table::new(&[
            "epsilon",
            "delta",
            "cells",
            "x_eps",
            "mean",
            "se_mean",
            "variance",
            "se_variance",
            "skewness",
            "excess_kurtosis",
            "variance_ratio",
            "oracle_variance",
            "oracle_z",
            "ks_limit_p",
            "ks_normal_p",
            "energy",
            "energy_p",
            "rho_ratio",
        ]);
        let nan = f64::NAN;
        for s in &self.per_epsilon {
            let m = s.moments[s.moments.len() - 1];
            summary.push(vec![
                s.epsilon,
                s.delta,
                s.cells as f64,
                s.x_eps,
                m.mean,
                m.se_mean,
                m.variance,
                m.se_variance,
                m.skewness,
                m.excess_kurtosis,
                s.variance_ratio[s.variance_ratio.len() - 1],
                s.oracle_variance.unwrap_or(nan),
                s.oracle_z.unwrap_or(nan),
                s.ks_limit.map_or(nan, |t| t.p_value),
                s.ks_normal.map_or(nan, |t| t.p_value),
                s.energy.statistic,
                s.energy.p_value,
                s.rho_ratio.map_or(nan, |r| r.mean),
            ]);
        }
        let mut out = vec![("convergence".to_string(), summary)];
        if self.probes.len() > 1 {
            let mut probes = Table::new(&["epsilon", "x", "mean", "variance", "se_variance", "limit_variance", "variance_ratio"]);
            for s in &self.per_epsilon {
                for (k, x) in self.probes.iter().enumerate() {
                    let m = s.moments[k];
                    probes.push(vec![s.epsilon, *x, m.mean, m.variance, m.se_variance, s.limit_variance[k], s.variance_ratio[k]]);
                }
            }
            out.push(("probes".to_string(), probes));
        }
        out
    }
}

/// `(V_m/m!)²·‖h‖²_{Λ^H}`.
pub fn limit_variance(phi: &RankedFunction, h: &IntegrandFn, hurst: f64) -> f64 {
    let c = phi.leading_coefficient() / factorial(phi.rank() as u32);
    c * c * lambda_norm(h, hurst)
}

fn hermite_sampler(m: u32, h0: f64, t_max: f64, z_grid: usize) -> Result<HermiteProcess, Error> {
    HermiteProcess::new(HermiteProcessConfig::new(m, h0, t_max, z_grid, None, 0)?)
}

/// `M^ε_h` for `replicas` independent paths.
#[allow(clippy::too_many_arguments)]
pub fn oscillatory_ensemble(
    pool: &ThreadPool,
    kernel: &KernelSpec,
    phi: &RankedFunction,
    h: &IntegrandFn,
    eps: f64,
    samples_per_unit: f64,
    replicas: usize,
    seed_base: u64,
) -> Result<(Vec<f64>, Vec<String>, f64, usize), Error> {
    let delta = aligned_delta(eps, samples_per_unit);
    let n = (1.0 / (eps * delta)).round() as usize;
    let ma = MovingAverage::new(kernel, delta, None)?;
    let res = par_map(pool, replicas, |i| {
        let path = ma.path(n, seed_base.wrapping_add(i as u64));
        oscillatory_integral(&path, phi, |x| h.eval(x), eps, kernel)
    });
    let mut failures = Vec::new();
    let v = split(res, &mut failures);
    Ok((v, failures, delta, n))
}

/// `(V_m/m!)∫h dZ` for `replicas` Hermite-process paths.
pub fn limit_ensemble(
    pool: &ThreadPool,
    kernel: &KernelSpec,
    phi: &RankedFunction,
    h: &IntegrandFn,
    z_grid: usize,
    replicas: usize,
    seed_base: u64,
) -> Result<Vec<f64>, Error> {
    let t_max = h.support().1.max(1.0);
    let hp = hermite_sampler(kernel.m, kernel.h0, t_max, z_grid)?;
    let res = par_map(pool, replicas, |i| {
        let z = hp.sample(seed_base.wrapping_add(LIMIT_SEED_OFFSET).wrapping_add(i as u64));
        limit_sample(phi, h, &z)
    });
    res.into_iter().collect()
}

fn run_oscillatory(pool: &ThreadPool, cfg: &ExperimentConfig) -> Result<ConvergenceReport, LabError> {
    let kernel = cfg.kernel()?;
    let phi = cfg.phi_config().build()?;
    let h = cfg.h.build()?;
    let th = cfg.thresholds;
    let lim_var = limit_variance(&phi, &h, kernel.h);
    let lim = limit_ensemble(pool, &kernel, &phi, &h, cfg.z_grid, cfg.replicas, cfg.seed_base)?;
    let lim_m = Moments::of(&lim);
    let mut per = Vec::new();
    for &eps in &cfg.epsilons {
        let (xs, failures, delta, n) =
            oscillatory_ensemble(pool, &kernel, &phi, &h, eps, cfg.samples_per_unit, cfg.replicas, cfg.seed_base)?;
        if xs.len() < 3 {
            return Err(LabError::Runtime(format!("all replicas failed at epsilon = {eps}: {failures:?}")));
        }
        let mo = Moments::of(&xs);
        let ratio = mo.variance / lim_var;
        let oracle = finite_eps_variance_oracle(&kernel, &phi.expansion, |r| h.autocorrelation(r), eps);
        let z = (mo.variance - oracle) / mo.se_variance;
        let ks = ks_two_sample(&xs, &lim);
        let ks_normal = (phi.rank() == 1).then(|| {
            let sd = lim_var.sqrt();
            ks_one_sample(&xs, |x| normal_cdf(x / sd))
        });
        let en = energy_test(&xs, &lim, 1, cfg.permutations, cfg.seed_base);
        let mut flags = vec![
            Flag::below("variance_ratio_deviation", (ratio - 1.0).abs(), th.variance_ratio),
            Flag::below("oracle_abs_z", z.abs(), th.z_score),
            Flag::above("ks_limit_p", ks.p_value, th.p_value),
        ];
        if let Some(k) = ks_normal {
            flags.push(Flag::above("ks_normal_p", k.p_value, th.p_value));
        }
        per.push(EpsilonSummary {
            epsilon: eps,
            delta,
            cells: n,
            x_eps: x_eps(&kernel, eps),
            moments: vec![mo.into()],
            limit_variance: vec![lim_var],
            variance_ratio: vec![ratio],
            oracle_variance: Some(oracle),
            oracle_z: Some(z),
            ks_limit: Some(TestResult {
                statistic: ks.statistic,
                p_value: ks.p_value,
            }),
            ks_normal: ks_normal.map(|k| TestResult {
                statistic: k.statistic,
                p_value: k.p_value,
            }),
            energy: TestResult {
                statistic: en.statistic,
                p_value: en.p_value,
            },
            rho_ratio: None,
            max_reconstruction_error: None,
            median_sup_corrector: None,
            flags,
            failures,
        });
    }
    let trend = Trend::of(per.iter().map(|s| s.energy.statistic).collect(), 1);
    Ok(ConvergenceReport {
        mode: Mode::Oscillatory.name().into(),
        m: kernel.m,
        h0: kernel.h0,
        hurst: kernel.h,
        v_m: phi.leading_coefficient(),
        replicas: cfg.replicas,
        seed_base: cfg.seed_base,
        probes: vec![],
        limit_moments: vec![lim_m.into()],
        per_epsilon: per,
        energy_trend: trend,
    })
}

/// `x ↦ F(x, ·)` as an integrand on `[0, 1]`.
pub fn corrector_integrand(k: &LimitKernel, x: f64) -> Result<IntegrandFn, Error> {
    let k = k.clone();
    IntegrandFn::continuous(Arc::new(move |y| k.eval(x, y)), 0.0, 1.0)
}

/// Probe vectors `(V_m/m!)∫F(x_k,y)dZ(y)` of the corrector limit, flattened row-major.
#[allow(clippy::too_many_arguments)]
pub fn corrector_limit_ensemble(
    pool: &ThreadPool,
    kernel: &KernelSpec,
    phi: &RankedFunction,
    lk: &LimitKernel,
    probes: &[f64],
    z_grid: usize,
    replicas: usize,
    seed_base: u64,
) -> Result<Vec<f64>, Error> {
    let hp = hermite_sampler(kernel.m, kernel.h0, 1.0, z_grid)?;
    let integrands = probes
        .iter()
        .map(|&x| if x > 0.0 { corrector_integrand(lk, x).map(Some) } else { Ok(None) })
        .collect::<Result<Vec<_>, _>>()?;
    let factor = phi.expansion.coeffs[phi.rank()] / factorial(phi.rank() as u32);
    let rows = par_map(pool, replicas, |i| -> Result<Vec<f64>, Error> {
        let z = hp.sample(seed_base.wrapping_add(LIMIT_SEED_OFFSET).wrapping_add(i as u64));
        integrands
            .iter()
            .map(|f| match f {
                Some(f) => Ok(factor * wiener_integral(&z, f)?),
                None => Ok(0.0),
            })
            .collect()
    });
    let mut flat = Vec::with_capacity(replicas * probes.len());
    for r in rows {
        flat.extend(r?);
    }
    Ok(flat)
}

struct CorrectorReplica {
    probes: Vec<f64>,
    rho_ratio: f64,
    reconstruction: f64,
    sup: f64,
}

fn run_corrector(pool: &ThreadPool, cfg: &ExperimentConfig) -> Result<ConvergenceReport, LabError> {
    let kernel = cfg.kernel()?;
    let phi_cfg = cfg.phi_config();
    let sampler = phi_cfg.sampler()?;
    let phi = sampler.phi.clone();
    let source = Source::by_name(&cfg.source)?;
    let dim = cfg.probes.len();
    if dim == 0 {
        return Err(LabError::Validation("corrector mode needs at least one probe point".into()));
    }
    let th = cfg.thresholds;
    let base = ProblemSpec::new(source, cfg.b, cfg.epsilons[0], sampler.clone(), 1000)?;
    let lk = LimitKernel::new(&base);
    let factor = phi.expansion.coeffs[phi.rank()] / factorial(phi.rank() as u32);
    let lim_var: Vec<f64> = cfg
        .probes
        .iter()
        .map(|&x| {
            if x > 0.0 {
                corrector_integrand(&lk, x).map(|f| factor * factor * lambda_norm(&f, kernel.h))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_, _>>()?;
    let lim = corrector_limit_ensemble(pool, &kernel, &phi, &lk, &cfg.probes, cfg.z_grid, cfg.replicas, cfg.seed_base)?;
    let lim_moments: Vec<MomentsReport> = (0..dim).map(|k| Moments::of(&column(&lim, dim, k)).into()).collect();

    let mut per = Vec::new();
    for &eps in &cfg.epsilons {
        let spec = ProblemSpec::new(Source::by_name(&cfg.source)?, cfg.b, eps, sampler.clone(), 1000)?;
        let delta = aligned_delta(eps, cfg.samples_per_unit);
        let n = (1.0 / (eps * delta)).round() as usize;
        let ma = MovingAverage::new(&kernel, delta, None)?;
        let xe = x_eps(&kernel, eps);
        let res = par_map(pool, cfg.replicas, |i| -> Result<CorrectorReplica, Error> {
            let path = ma.path(n, cfg.seed_base.wrapping_add(i as u64));
            let medium = Medium::from_path(&sampler, &path, eps)?;
            let pair = solve_on(&spec, &medium);
            let dec = decompose(&spec, &medium, &pair, xe)?;
            let probes = cfg
                .probes
                .iter()
                .map(|&x| dec.rescaled[(x * n as f64).round() as usize])
                .collect();
            let sup = pair.corrector().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            Ok(CorrectorReplica {
                probes,
                rho_ratio: dec.rho_eps.abs() / (xe * xe),
                reconstruction: dec.reconstruction_error,
                sup,
            })
        });
        let mut failures = Vec::new();
        let reps = split(res, &mut failures);
        if reps.len() < 3 {
            return Err(LabError::Runtime(format!("all replicas failed at epsilon = {eps}: {failures:?}")));
        }
        let flat: Vec<f64> = reps.iter().flat_map(|r| r.probes.iter().copied()).collect();
        let moments: Vec<Moments> = (0..dim).map(|k| Moments::of(&column(&flat, dim, k))).collect();
        let variance_ratio: Vec<f64> = moments.iter().zip(&lim_var).map(|(m, l)| m.variance / l).collect();
        let rho: Vec<f64> = reps.iter().map(|r| r.rho_ratio).collect();
        let rho_m = Moments::of(&rho);
        let recon = reps.iter().fold(0.0f64, |a, r| a.max(r.reconstruction));
        let mut sups: Vec<f64> = reps.iter().map(|r| r.sup).collect();
        sups.sort_by(|a, b| a.total_cmp(b));
        let en = energy_test(&flat, &lim, dim, cfg.permutations, cfg.seed_base);
        let flags = vec![
            Flag::below("reconstruction_error", recon, 1e-8),
            Flag::above("energy_p", en.p_value, th.p_value),
        ];
        per.push(EpsilonSummary {
            epsilon: eps,
            delta,
            cells: n,
            x_eps: xe,
            moments: moments.into_iter().map(Into::into).collect(),
            limit_variance: lim_var.clone(),
            variance_ratio,
            oracle_variance: None,
            oracle_z: None,
            ks_limit: None,
            ks_normal: None,
            energy: TestResult {
                statistic: en.statistic,
                p_value: en.p_value,
            },
            rho_ratio: Some(MeanSe {
                mean: rho_m.mean,
                se: rho_m.se_mean,
            }),
            max_reconstruction_error: Some(recon),
            median_sup_corrector: Some(sups[sups.len() / 2]),
            flags,
            failures,
        });
    }
    let trend = Trend::of(per.iter().map(|s| s.energy.statistic).collect(), 1);
    Ok(ConvergenceReport {
        mode: Mode::Corrector.name().into(),
        m: kernel.m,
        h0: kernel.h0,
        hurst: kernel.h,
        v_m: phi.leading_coefficient(),
        replicas: cfg.replicas,
        seed_base: cfg.seed_base,
        probes: cfg.probes.clone(),
        limit_moments: lim_moments,
        per_epsilon: per,
        energy_trend: trend,
    })
}

fn column(flat: &[f64], dim: usize, k: usize) -> Vec<f64> {
    flat.chunks(dim).map(|r| r[k]).collect()
}

/// Oscillatory or corrector experiment as described by `cfg.mode`.
pub fn run_convergence(pool: &ThreadPool, cfg: &ExperimentConfig) -> Result<ConvergenceReport, LabError> {
    cfg.validate()?;
    match cfg.mode()? {
        Mode::Oscillatory => run_oscillatory(pool, cfg),
        Mode::Corrector => run_corrector(pool, cfg),
        other => Err(LabError::Validation(format!("run_convergence does not handle mode {}", other.name()))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceRow {
    pub lag: f64,
    pub r_g: f64,
    pub r_phi: f64,
    pub asymptote: f64,
    pub ratio: f64,
    pub mc: Option<f64>,
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub m: u32,
    pub h0: f64,
    pub v_m: f64,
    pub rows: Vec<CovarianceRow>,
    /// `max_x |R_Φ(x)|/(L(x)^{2m}x^{2H−2})` over the reported lags.
    pub potter_constant: f64,
}

impl CovarianceReport {
    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["lag", "r_g", "r_phi", "asymptote", "ratio", "mc", "mc_se"]);
        for r in &self.rows {
            t.push(vec![
                r.lag,
                r.r_g,
                r.r_phi,
                r.asymptote,
                r.ratio,
                r.mc.unwrap_or(f64::NAN),
                r.mc_se.unwrap_or(f64::NAN),
            ]);
        }
        vec![("covariance".to_string(), t)]
    }
}

/// Covariance of `Φ(g)` by the chaos formula and, for lags shorter than a
/// quarter of `mc_length·Δ`, by time averages over `mc_paths` paths.
#[allow(clippy::too_many_arguments)]
pub fn covariance_decay_report(
    pool: &ThreadPool,
    phi: &RankedFunction,
    kernel: &KernelSpec,
    lags: &[f64],
    mc_paths: usize,
    mc_length: usize,
    delta: f64,
    seed_base: u64,
) -> Result<CovarianceReport, Error> {
    let rows = covariance_decay_rows(kernel, phi, lags)?;
    let mut mc: Vec<Option<(f64, f64)>> = vec![None; rows.len()];
    if mc_paths >= 2 && mc_length > 0 {
        let ma = MovingAverage::new(kernel, delta, None)?;
        let v0 = phi.expansion.coeffs[0];
        let steps: Vec<Option<usize>> = lags
            .iter()
            .map(|&l| {
                let k = (l / delta).round() as usize;
                ((k as f64 * delta - l).abs() < 1e-9 * l && 4 * k <= mc_length).then_some(k)
            })
            .collect();
        let per_path = par_map(pool, mc_paths, |i| {
            let g = ma.sample(mc_length, seed_base.wrapping_add(i as u64));
            let c: Vec<f64> = g.iter().map(|&x| phi.eval(x) - v0).collect();
            steps
                .iter()
                .map(|s| {
                    s.map(|k| {
                        let n = c.len() - k;
                        (0..n).map(|j| c[j] * c[j + k]).sum::<f64>() / n as f64
                    })
                })
                .collect::<Vec<_>>()
        });
        for (r, slot) in mc.iter_mut().enumerate() {
            if steps[r].is_some() {
                let xs: Vec<f64> = per_path.iter().map(|p| p[r].unwrap()).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
                *slot = Some((mean, (var / n).sqrt()));
            }
        }
    }
    let potter_constant = rows
        .iter()
        .map(|r| r.r_phi.abs() / (kernel.effective_l(r.lag).powi(2 * kernel.m as i32) * r.lag.powf(2.0 * kernel.h - 2.0)))
        .fold(0.0f64, f64::max);
    Ok(CovarianceReport {
        m: kernel.m,
        h0: kernel.h0,
        v_m: phi.leading_coefficient(),
        rows: rows
            .iter()
            .zip(mc)
            .map(|(r, mc)| CovarianceRow {
                lag: r.lag,
                r_g: r.r_g,
                r_phi: r.r_phi,
                asymptote: r.asymptote,
                ratio: r.ratio,
                mc: mc.map(|v| v.0),
                mc_se: mc.map(|v| v.1),
            })
            .collect(),
        potter_constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaqquRow {
    pub t: f64,
    pub oracle: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaqquReport {
    pub m: u32,
    pub h0: f64,
    pub delta: f64,
    pub replicas: usize,
    pub rows: Vec<TaqquRow>,
    /// Energy distance between `(I(T/2), I(T))/d(T)` at the largest `T` and `(Z(1/2), Z(1))`.
    pub fdd_energy: Option<TestResult>,
}

impl TaqquReport {
    pub fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["T", "oracle", "estimate", "se", "z"]);
        for r in &self.rows {
            t.push(vec![r.t, r.oracle, r.estimate, r.se, r.z]);
        }
        vec![("taqqu".to_string(), t)]
    }
}

/// Variance of `(1/d(T))∫_0^T H_m(g(y))dy` by quadrature and by Monte Carlo,
/// with integrals from the trapezoidal rule on `g(jΔ)`. All `T` share the
/// same paths, sampled once up to the largest `T`.
#[allow(clippy::too_many_arguments)]
pub fn taqqu_variance_report(
    pool: &ThreadPool,
    kernel: &KernelSpec,
    ts: &[f64],
    replicas: usize,
    delta: f64,
    seed_base: u64,
    fdd: Option<(usize, usize)>,
) -> Result<TaqquReport, Error> {
    if ts.is_empty() || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Inconsistent("Ts must be a non-empty increasing list".into()));
    }
    let m = kernel.m as usize;
    let steps: Vec<usize> = ts.iter().map(|t| (t / delta).round().max(1.0) as usize).collect();
    let n_max = *steps.last().unwrap();
    let ma = MovingAverage::new(kernel, delta, None)?;
    let half = (n_max / 2, n_max);
    let per_path = par_map(pool, replicas, |i| {
        let g = ma.sample(n_max, seed_base.wrapping_add(i as u64));
        let hm: Vec<f64> = g.iter().map(|&x| hermite_eval(m, x)).collect();
        let mut prefix = Vec::with_capacity(hm.len());
        prefix.push(0.0);
        for w in hm.windows(2) {
            let last = *prefix.last().unwrap();
            prefix.push(last + 0.5 * delta * (w[0] + w[1]));
        }
        let at: Vec<f64> = steps.iter().map(|&k| prefix[k]).collect();
        (at, (prefix[half.0], prefix[half.1]))
    });
    let mut rows = Vec::new();
    for (k, &t) in ts.iter().enumerate() {
        let tt = steps[k] as f64 * delta;
        let dt = d(kernel, tt);
        let xs: Vec<f64> = per_path.iter().map(|p| p.0[k] / dt).collect();
        let mo = Moments::of(&xs);
        let oracle = taqqu_variance_oracle(kernel, tt);
        rows.push(TaqquRow {
            t,
            oracle,
            estimate: mo.variance,
            se: mo.se_variance,
            z: (mo.variance - oracle) / mo.se_variance,
        });
    }
    let fdd_energy = match fdd {
        Some((z_grid, permutations)) => {
            let tt = n_max as f64 * delta;
            let dt = d(kernel, tt);
            let xs: Vec<f64> = per_path.iter().flat_map(|p| [p.1 .0 / dt, p.1 .1 / dt]).collect();
            let grid = z_grid.max(2) / 2 * 2;
            let hp = hermite_sampler(kernel.m, kernel.h0, 1.0, grid)?;
            let zs: Vec<f64> = par_map(pool, replicas, |i| {
                let z = hp.sample_values(seed_base.wrapping_add(LIMIT_SEED_OFFSET).wrapping_add(i as u64));
                [z[grid / 2], z[grid]]
            })
            .into_iter()
            .flatten()
            .collect();
            let e = energy_test(&xs, &zs, 2, permutations, seed_base);
            Some(TestResult {
                statistic: e.statistic,
                p_value: e.p_value,
            })
        }
        None => None,
    };
    Ok(TaqquReport {
        m: kernel.m,
        h0: kernel.h0,
        delta,
        replicas,
        rows,
        fdd_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use oscillab_core::hermite::pure_hermite;

    fn pool() -> ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap()
    }

    #[test]
    fn trend_counts_inversions() {
        assert_eq!(Trend::of(vec![3.0, 2.0, 2.5, 1.0], 1).inversions, 1);
        assert!(!Trend::of(vec![1.0, 2.0, 3.0], 1).passed);
    }

    #[test]
    fn ensembles_do_not_depend_on_thread_count() {
        let k = KernelSpec::default_for(1, 0.8).unwrap();
        let phi = pure_hermite(1).unwrap();
        let h = IntegrandFn::indicator(0.0, 1.0).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = oscillatory_ensemble(&one, &k, &phi, &h, 0.1, 20.0, 8, 5).unwrap().0;
        let b = oscillatory_ensemble(&pool(), &k, &phi, &h, 0.1, 20.0, 8, 5).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_phi_gives_zero_ensemble() {
        let k = KernelSpec::default_for(1, 0.8).unwrap();
        let phi = RankedFunction::constant(0.0);
        let h = IntegrandFn::indicator(0.0, 1.0).unwrap();
        let (v, ..) = oscillatory_ensemble(&pool(), &k, &phi, &h, 0.1, 20.0, 5, 1).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn covariance_report_single_chaos() {
        let k = KernelSpec::default_for(2, 0.9).unwrap();
        let phi = pure_hermite(2).unwrap();
        let r = covariance_decay_report(&pool(), &phi, &k, &[1.0, 10.0, 100.0], 0, 0, 1.0, 0).unwrap();
        for row in &r.rows {
            assert!((row.r_phi - 2.0 * row.r_g * row.r_g).abs() < 1e-15);
        }
        assert!(r.potter_constant.is_finite());
    }

    #[test]
    fn deterministic_corrector_is_degenerate() {
        let mut cfg = ExperimentConfig::minimal(1, 0.8, Mode::Corrector);
        cfg.epsilons = vec![0.1];
        cfg.replicas = 100;
        cfg.permutations = 10;
        cfg.z_grid = 50;
        cfg.phi = Some(crate::config::PhiConfig {
            method: crate::config::PhiMethod::Constant,
            m: 0,
            a_star: 1.5,
            nodes: None,
            psi: None,
        });
        let r = run_convergence(&pool(), &cfg).unwrap();
        let s = &r.per_epsilon[0];
        // identical up to rounding
        assert!(s.moments.iter().all(|m| m.mean.abs() < 1e-12 && m.variance < 1e-24), "{:?}", s.moments);
        assert!(r.limit_moments.iter().all(|m| m.variance == 0.0));
    }
}
